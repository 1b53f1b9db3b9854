#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"

#include "wickmps/channel.hpp"
#include "wickmps/correlators.hpp"
#include "wickmps/polefit.hpp"
#include "wickmps/wick.hpp"

namespace wickmps::io {

// Every file is a JSON object {"schema": "wick-mps/1", "type": ..., ...}.
// Complex numbers are [re, im]; matrices are row-major nested arrays;
// multi-arrays are a shape plus a flat row-major value list.

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "wick-mps/1";
inline constexpr const char* kGapConventionDiscrete = "gap = site distance - 1";
inline constexpr const char* kGapConventionContinuous = "gap = separation length";

/// A state plus the operator set it is probed with.
struct StateFile {
  SystemKind kind = SystemKind::discrete;
  MpsState mps;
  CmpsState cmps;
  std::vector<OperatorMatrix> operators;
  /// Discrete only: the q x q local operator behind each label.
  std::map<int, Matrix> local_operators;

  TransferSystem system() const;
};

Json to_json(Complex z);
Complex complex_from_json(const Json& j);
Json to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json to_json(const Vector& v);
Vector vector_from_json(const Json& j);
Json to_json(const MultiArray& a);
MultiArray multi_array_from_json(const Json& j);

Json to_json(const StateFile& s);
StateFile state_from_json(const Json& j);
Json to_json(const CorrelationTable& t);
CorrelationTable table_from_json(const Json& j);
Json to_json(const PoleSet& p);
PoleSet pole_set_from_json(const Json& j);
Json to_json(const ResidueTensor& r);
ResidueTensor residue_tensor_from_json(const Json& j);
Json to_json(const PNumberCertificate& c);
PNumberCertificate certificate_from_json(const Json& j);
Json to_json(const Representative& r);
Representative representative_from_json(const Json& j);
Json to_json(const LindbladSpec& s);
LindbladSpec lindblad_spec_from_json(const Json& j);
Json to_json(const VerificationReport& r);
VerificationReport report_from_json(const Json& j);

/// The "type" field, checked against the schema version.
std::string file_type(const Json& j);

std::string dump(const Json& j, int indent);
Json parse(const std::string& text);
Json read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Json& j, int indent);

}  // namespace wickmps::io
