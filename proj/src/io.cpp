#include "wickmps/io.hpp"

#include <fstream>
#include <sstream>

namespace wickmps::io {

namespace {

template <typename F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedInput, std::string("malformed ") + what + ": " + e.what());
  }
}

Json header(const char* type) {
  Json j;
  j["schema"] = kSchema;
  j["type"] = type;
  return j;
}

void expect_type(const Json& j, const char* type) {
  const std::string t = file_type(j);
  if (t != type) {
    throw Error(ErrorKind::MalformedInput, "expected a " + std::string(type) + " file, got " + t);
  }
}

template <typename T>
std::vector<T> list_of(const Json& j) {
  return j.get<std::vector<T>>();
}

}  // namespace

TransferSystem StateFile::system() const {
  return kind == SystemKind::discrete ? make_system(mps, operators) : make_system(cmps, operators);
}

Json to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

Complex complex_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2) {
    throw Error(ErrorKind::MalformedInput, "complex value must be [re, im]");
  }
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  return guarded("matrix", [&] {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.at(0).size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Json& row = j.at(static_cast<std::size_t>(r));
      if (static_cast<Eigen::Index>(row.size()) != cols) {
        throw Error(ErrorKind::MalformedInput, "ragged matrix");
      }
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_from_json(row.at(static_cast<std::size_t>(c)));
    }
    return m;
  });
}

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(to_json(v(k)));
  return out;
}

Vector vector_from_json(const Json& j) {
  return guarded("vector", [&] {
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = complex_from_json(j.at(k));
    return v;
  });
}

Json to_json(const MultiArray& a) {
  Json j;
  j["shape"] = a.shape();
  Json data = Json::array();
  for (const auto& z : a.data()) data.push_back(to_json(z));
  j["data"] = std::move(data);
  return j;
}

MultiArray multi_array_from_json(const Json& j) {
  return guarded("array", [&] {
    MultiArray a(list_of<std::size_t>(j.at("shape")));
    const Json& data = j.at("data");
    if (data.size() != a.size()) throw Error(ErrorKind::MalformedInput, "array data length differs from shape");
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = complex_from_json(data.at(k));
    return a;
  });
}

Json to_json(const StateFile& s) {
  Json j = header(s.kind == SystemKind::discrete ? "mps_state" : "cmps_state");
  if (s.kind == SystemKind::discrete) {
    j["bond_dim"] = s.mps.bond_dim();
    j["phys_dim"] = s.mps.phys_dim();
    Json tensors = Json::array();
    for (const auto& a : s.mps.tensors) tensors.push_back(to_json(a));
    j["tensors"] = std::move(tensors);
  } else {
    j["bond_dim"] = s.cmps.bond_dim();
    j["Q"] = to_json(s.cmps.Q);
    j["R"] = to_json(s.cmps.R);
  }
  Json ops = Json::array();
  for (const auto& op : s.operators) {
    Json o;
    o["label"] = op.label;
    o["kind"] = std::string(to_string(op.kind));
    if (auto it = s.local_operators.find(op.label); it != s.local_operators.end()) {
      o["local"] = to_json(it->second);
    }
    o["matrix"] = to_json(op.matrix);
    ops.push_back(std::move(o));
  }
  j["operators"] = std::move(ops);
  return j;
}

StateFile state_from_json(const Json& j) {
  return guarded("state", [&] {
    const std::string type = file_type(j);
    StateFile s;
    if (type == "mps_state") {
      s.kind = SystemKind::discrete;
      for (const auto& t : j.at("tensors")) s.mps.tensors.push_back(matrix_from_json(t));
      if (s.mps.tensors.empty()) throw Error(ErrorKind::MalformedInput, "state has no tensors");
    } else if (type == "cmps_state") {
      s.kind = SystemKind::continuous;
      s.cmps.Q = matrix_from_json(j.at("Q"));
      s.cmps.R = matrix_from_json(j.at("R"));
    } else {
      throw Error(ErrorKind::MalformedInput, "not a state file: " + type);
    }
    for (const auto& o : j.at("operators")) {
      OperatorMatrix op;
      op.label = o.at("label").get<int>();
      op.kind = operator_kind_from_string(o.at("kind").get<std::string>());
      op.matrix = matrix_from_json(o.at("matrix"));
      if (o.contains("local")) s.local_operators.emplace(op.label, matrix_from_json(o.at("local")));
      s.operators.push_back(std::move(op));
    }
    return s;
  });
}

Json to_json(const CorrelationTable& t) {
  Json j = header("correlation_table");
  j["kind"] = std::string(to_string(t.kind));
  j["order"] = t.order();
  j["labels"] = t.labels;
  j["gap_convention"] =
      t.kind == SystemKind::discrete ? kGapConventionDiscrete : kGapConventionContinuous;
  j["window"] = {{"n_max", t.window.n_max}, {"step", t.window.step}, {"points", t.window.points}};
  j["values"] = to_json(t.values);
  return j;
}

CorrelationTable table_from_json(const Json& j) {
  return guarded("correlation table", [&] {
    expect_type(j, "correlation_table");
    CorrelationTable t;
    t.kind = system_kind_from_string(j.at("kind").get<std::string>());
    t.labels = list_of<int>(j.at("labels"));
    const Json& w = j.at("window");
    t.window.n_max = w.at("n_max").get<std::size_t>();
    t.window.step = w.at("step").get<double>();
    t.window.points = w.at("points").get<std::size_t>();
    t.values = multi_array_from_json(j.at("values"));
    if (t.labels.empty() || t.values.rank() + 1 != t.labels.size()) {
      throw Error(ErrorKind::MalformedInput, "table rank does not match its labels");
    }
    for (auto s : t.values.shape()) {
      if (s != t.window.points) throw Error(ErrorKind::MalformedInput, "table shape does not match its window");
    }
    return t;
  });
}

Json to_json(const PoleSet& p) {
  Json j = header("pole_set");
  j["kind"] = std::string(to_string(p.kind));
  j["poles"] = to_json(p.poles);
  j["confidence"] = p.confidence;
  j["leading"] = p.leading ? Json(*p.leading) : Json(nullptr);
  j["requested"] = p.requested;
  j["rank_deficient"] = p.rank_deficient;
  j["step"] = p.step;
  j["samples"] = p.samples;
  return j;
}

PoleSet pole_set_from_json(const Json& j) {
  return guarded("pole set", [&] {
    expect_type(j, "pole_set");
    PoleSet p;
    p.kind = system_kind_from_string(j.at("kind").get<std::string>());
    p.poles = vector_from_json(j.at("poles"));
    p.confidence = list_of<double>(j.at("confidence"));
    if (!j.at("leading").is_null()) p.leading = j.at("leading").get<std::size_t>();
    p.requested = j.at("requested").get<std::size_t>();
    p.rank_deficient = j.at("rank_deficient").get<bool>();
    p.step = j.at("step").get<double>();
    p.samples = j.at("samples").get<std::size_t>();
    return p;
  });
}

Json to_json(const ResidueTensor& r) {
  Json j = header("residue_tensor");
  j["kind"] = std::string(to_string(r.kind));
  j["labels"] = r.labels;
  j["spectrum"] = to_json(r.spectrum);
  j["coefficients"] = to_json(r.coefficients);
  if (r.fit) {
    std::vector<int> zeros;
    for (bool z : r.fit->structural_zero) zeros.push_back(z ? 1 : 0);
    j["fit"] = {{"max_residual", r.fit->max_residual},
                {"relative_residual", r.fit->relative_residual},
                {"condition", r.fit->condition},
                {"structural_zero", zeros}};
  }
  return j;
}

ResidueTensor residue_tensor_from_json(const Json& j) {
  return guarded("residue tensor", [&] {
    expect_type(j, "residue_tensor");
    ResidueTensor r;
    r.kind = system_kind_from_string(j.at("kind").get<std::string>());
    r.labels = list_of<int>(j.at("labels"));
    r.spectrum = vector_from_json(j.at("spectrum"));
    r.coefficients = multi_array_from_json(j.at("coefficients"));
    if (r.labels.size() < 2 || r.coefficients.rank() + 1 != r.labels.size()) {
      throw Error(ErrorKind::MalformedInput, "residue tensor rank does not match its labels");
    }
    if (j.contains("fit")) {
      const Json& f = j.at("fit");
      ResidueFitDiagnostics d;
      d.max_residual = f.at("max_residual").get<double>();
      d.relative_residual = f.at("relative_residual").get<double>();
      d.condition = f.at("condition").get<double>();
      for (int z : list_of<int>(f.at("structural_zero"))) d.structural_zero.push_back(z != 0);
      r.fit = std::move(d);
    }
    return r;
  });
}

Json to_json(const PNumberCertificate& c) {
  Json j = header("p_number_certificate");
  j["bond_dim"] = c.bond_dim;
  j["kind"] = std::string(to_string(c.kind));
  j["p"] = c.p ? Json(*c.p) : Json("infinite");
  j["missing_poles"] = c.missing_poles;
  j["poles"] = to_json(c.poles);
  Json ws = Json::array();
  for (const auto& w : c.witnesses) {
    ws.push_back({{"pole", w.pole},
                  {"points", w.points},
                  {"labels", w.labels},
                  {"axis", w.axis},
                  {"indices", w.indices},
                  {"magnitude", w.magnitude},
                  {"by_normalization", w.by_normalization}});
  }
  j["witnesses"] = std::move(ws);
  return j;
}

PNumberCertificate certificate_from_json(const Json& j) {
  return guarded("certificate", [&] {
    expect_type(j, "p_number_certificate");
    PNumberCertificate c;
    c.bond_dim = j.at("bond_dim").get<Eigen::Index>();
    c.kind = system_kind_from_string(j.at("kind").get<std::string>());
    const Json& p = j.at("p");
    if (p.is_string()) {
      if (p.get<std::string>() != "infinite") throw Error(ErrorKind::MalformedInput, "bad p value");
    } else {
      c.p = p.get<std::size_t>();
    }
    c.missing_poles = j.at("missing_poles").get<std::size_t>();
    c.poles = vector_from_json(j.at("poles"));
    for (const auto& w : j.at("witnesses")) {
      Witness x;
      x.pole = w.at("pole").get<std::size_t>();
      x.points = w.at("points").get<std::size_t>();
      x.labels = list_of<int>(w.at("labels"));
      x.axis = w.at("axis").get<std::size_t>();
      x.indices = list_of<std::size_t>(w.at("indices"));
      x.magnitude = w.at("magnitude").get<double>();
      x.by_normalization = w.at("by_normalization").get<bool>();
      c.witnesses.push_back(std::move(x));
    }
    return c;
  });
}

Json to_json(const Representative& r) {
  Json j = header("representative");
  j["kind"] = std::string(to_string(r.kind));
  j["bond_dim"] = r.bond_dim;
  j["reference_label"] = r.reference_label;
  j["spectrum"] = to_json(r.spectrum);
  Json ops = Json::array();
  for (const auto& [label, m] : r.operators) ops.push_back({{"label", label}, {"matrix", to_json(m)}});
  j["operators"] = std::move(ops);
  j["min_c2_ratio"] = r.min_c2_ratio;
  j["certificate"] = to_json(r.certificate);
  return j;
}

Representative representative_from_json(const Json& j) {
  return guarded("representative", [&] {
    expect_type(j, "representative");
    Representative r;
    r.kind = system_kind_from_string(j.at("kind").get<std::string>());
    r.bond_dim = j.at("bond_dim").get<Eigen::Index>();
    r.reference_label = j.at("reference_label").get<int>();
    r.spectrum = vector_from_json(j.at("spectrum"));
    for (const auto& o : j.at("operators")) {
      Matrix m = matrix_from_json(o.at("matrix"));
      if (m.rows() != r.spectrum.size() || m.cols() != r.spectrum.size()) {
        throw Error(ErrorKind::MalformedInput, "operator size differs from the spectrum");
      }
      r.operators.emplace(o.at("label").get<int>(), std::move(m));
    }
    r.min_c2_ratio = j.at("min_c2_ratio").get<double>();
    r.certificate = certificate_from_json(j.at("certificate"));
    return r;
  });
}

Json to_json(const LindbladSpec& s) {
  Json j = header("lindblad_spec");
  j["H"] = to_json(s.H);
  Json ops = Json::array();
  for (const auto& r : s.jump_ops) ops.push_back(to_json(r));
  j["jump_ops"] = std::move(ops);
  return j;
}

LindbladSpec lindblad_spec_from_json(const Json& j) {
  return guarded("lindblad spec", [&] {
    expect_type(j, "lindblad_spec");
    LindbladSpec s;
    s.H = matrix_from_json(j.at("H"));
    for (const auto& r : j.at("jump_ops")) s.jump_ops.push_back(matrix_from_json(r));
    return s;
  });
}

Json to_json(const VerificationReport& r) {
  Json j = header("verification_report");
  j["tolerance"] = r.tolerance;
  j["pass"] = r.pass;
  Json ts = Json::array();
  for (const auto& t : r.tables) {
    ts.push_back({{"labels", t.labels}, {"max_abs", t.max_abs}, {"max_rel", t.max_rel}, {"pass", t.pass}});
  }
  j["tables"] = std::move(ts);
  return j;
}

VerificationReport report_from_json(const Json& j) {
  return guarded("verification report", [&] {
    expect_type(j, "verification_report");
    VerificationReport r;
    r.tolerance = j.at("tolerance").get<double>();
    r.pass = j.at("pass").get<bool>();
    for (const auto& t : j.at("tables")) {
      TableDeviation d;
      d.labels = list_of<int>(t.at("labels"));
      d.max_abs = t.at("max_abs").get<double>();
      d.max_rel = t.at("max_rel").get<double>();
      d.pass = t.at("pass").get<bool>();
      r.tables.push_back(std::move(d));
    }
    return r;
  });
}

std::string file_type(const Json& j) {
  return guarded("file", [&] {
    if (!j.is_object()) throw Error(ErrorKind::MalformedInput, "top level must be an object");
    const std::string schema = j.at("schema").get<std::string>();
    if (schema != kSchema) throw Error(ErrorKind::MalformedInput, "unsupported schema " + schema);
    return j.at("type").get<std::string>();
  });
}

std::string dump(const Json& j, int indent) { return j.dump(indent < 0 ? -1 : indent) + "\n"; }

Json parse(const std::string& text) {
  return guarded("JSON", [&] { return Json::parse(text); });
}

Json read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::MalformedInput, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void write_file(const std::filesystem::path& path, const Json& j, int indent) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << dump(j, indent);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace wickmps::io
