#include "jil/io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <string_view>

namespace jil::io {

using nlohmann::json;

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_row(std::size_t row, const std::string& detail) {
  throw InvalidDataError("csv", row, detail);
}

double parse_number(std::string_view field, std::size_t row, std::string_view column) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    bad_row(row, "column " + std::string(column) + " is not a number: '" +
                     std::string(field) + "'");
  }
  if (!std::isfinite(v)) {
    bad_row(row, "column " + std::string(column) + " is not finite");
  }
  return v;
}

void check_header(const std::vector<std::string_view>& fields) {
  if (fields.size() < 2 || trim(fields[0]) != "y" || trim(fields[1]) != "a") {
    throw InvalidDataError("header", 1, "header must start with y,a");
  }
  for (std::size_t j = 2; j < fields.size(); ++j) {
    if (trim(fields[j]) != "x" + std::to_string(j - 1)) {
      throw InvalidDataError("header", 1,
                             "expected column x" + std::to_string(j - 1));
    }
  }
}

json model_to_json(const SegmentModel& model) {
  if (const auto* lin = std::get_if<LinearModel>(&model)) {
    return json{{"kind", "linear"}, {"theta", lin->theta}};
  }
  const auto& mlp = std::get<MlpModel>(model);
  return json{{"kind", "mlp"},
              {"layer_sizes", mlp.layer_sizes},
              {"weights", mlp.weights},
              {"biases", mlp.biases}};
}

SegmentModel model_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear") return LinearModel{j.at("theta").get<std::vector<double>>()};
  if (kind == "mlp") {
    MlpModel m;
    m.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
    m.biases = j.at("biases").get<std::vector<std::vector<double>>>();
    return m;
  }
  throw Error(ErrorKind::SchemaMismatch, "unknown model kind '" + kind + "'");
}

json propensity_to_json(const PropensityModel& prop) {
  const auto w = prop.weights.data();
  return json{{"kind", prop.kind == PropensityKind::Multinomial ? "multinomial" : "empirical"},
              {"rows", prop.weights.rows()},
              {"cols", prop.weights.cols()},
              {"weights", std::vector<double>(w.begin(), w.end())},
              {"freqs", prop.freqs},
              {"floor", prop.floor}};
}

PropensityModel propensity_from_json(const json& j, const Partition& partition) {
  PropensityModel prop;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "multinomial") prop.kind = PropensityKind::Multinomial;
  else if (kind == "empirical") prop.kind = PropensityKind::Empirical;
  else throw Error(ErrorKind::SchemaMismatch, "unknown propensity kind '" + kind + "'");
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  const auto w = j.at("weights").get<std::vector<double>>();
  if (w.size() != rows * cols) {
    throw Error(ErrorKind::SchemaMismatch, "propensity weights have the wrong size");
  }
  prop.weights = linalg::Matrix(rows, cols);
  std::copy(w.begin(), w.end(), prop.weights.data().begin());
  prop.freqs = j.at("freqs").get<std::vector<double>>();
  prop.floor = j.at("floor").get<double>();
  prop.partition = partition;
  return prop;
}

}  // namespace

Dataset read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw InvalidDataError("header", 1, "file is empty");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  // tolerate a UTF-8 byte order mark
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const auto header = split_fields(line);
  check_header(header);

  Dataset d;
  d.p = header.size() - 2;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      bad_row(row, "expected " + std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    d.outcomes.push_back(parse_number(fields[0], row, "y"));
    d.treatments.push_back(parse_number(fields[1], row, "a"));
    for (std::size_t j = 0; j < d.p; ++j) {
      d.covariates.push_back(parse_number(fields[j + 2], row, "x" + std::to_string(j + 1)));
    }
  }
  d.n = d.outcomes.size();
  if (d.n == 0) throw InvalidDataError("csv", std::nullopt, "no data rows");
  return d;
}

Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return read_csv(in);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v,
                                       std::chars_format::general, 17);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

void write_csv(std::ostream& out, const Dataset& d) {
  out << "y,a";
  for (std::size_t j = 1; j <= d.p; ++j) out << ",x" << j;
  out << '\n';
  for (std::size_t i = 0; i < d.n; ++i) {
    out << format_double(d.outcomes[i]) << ',' << format_double(d.treatments[i]);
    for (double v : d.row(i)) out << ',' << format_double(v);
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& d) {
  std::ostringstream os;
  write_csv(os, d);
  write_atomic(path, os.str());
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::IoError, "cannot rename onto " + path.string());
  }
}

double TreatmentScale::apply(double a) const {
  return std::clamp((a - min) / (max - min), 0.0, 1.0);
}

std::optional<TreatmentScale> normalize_if_needed(Dataset& d) {
  bool outside = false;
  for (double a : d.treatments) outside = outside || a < 0.0 || a > 1.0;
  if (!outside) return std::nullopt;
  const auto [lo, hi] = std::minmax_element(d.treatments.begin(), d.treatments.end());
  const TreatmentScale scale{*lo, *hi};
  d.treatments = normalize_treatment(d.treatments);
  return scale;
}

std::string timestamp_now() {
  std::time_t t = 0;
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH"); env && *env) {
    long long v = 0;
    const std::string_view s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size()) t = static_cast<std::time_t>(v);
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::size_t model_inputs(const JilFit& fit) {
  if (fit.models.empty()) throw Error(ErrorKind::SchemaMismatch, "fit has no models");
  const auto& model = fit.models.front();
  if (const auto* lin = std::get_if<LinearModel>(&model)) return lin->theta.size() - 1;
  return std::get<MlpModel>(model).layer_sizes.front();
}

json to_json(const ModelArtifact& artifact) {
  const JilFit& fit = artifact.fit;
  json partition = json::array();
  for (const auto& iv : fit.partition.intervals()) partition.push_back({iv.lo, iv.hi});
  json models = json::array();
  for (const auto& m : fit.models) models.push_back(model_to_json(m));
  const Provenance& prov = artifact.provenance;
  json provenance{{"n", prov.n},
                  {"p", prov.p},
                  {"seed", prov.seed},
                  {"created_at", prov.created_at}};
  if (prov.treatment_scale) {
    provenance["treatment_min"] = prov.treatment_scale->min;
    provenance["treatment_max"] = prov.treatment_scale->max;
  }
  return json{{"schema_version", kSchemaVersion},
              {"method", fit.method == Method::Linear ? "ljil" : "djil"},
              {"m", fit.m},
              {"lambda", fit.lambda},
              {"gamma", fit.gamma},
              {"objective", fit.objective},
              {"partition", partition},
              {"models", models},
              {"propensity", propensity_to_json(artifact.propensity)},
              {"provenance", provenance}};
}

ModelArtifact artifact_from_json(const json& j) {
  try {
    const std::string version = j.at("schema_version").get<std::string>();
    if (version != kSchemaVersion) {
      throw Error(ErrorKind::SchemaMismatch, "unsupported schema_version '" + version + "'");
    }
    ModelArtifact out;
    JilFit& fit = out.fit;
    const std::string method = j.at("method").get<std::string>();
    if (method == "ljil") fit.method = Method::Linear;
    else if (method == "djil") fit.method = Method::Deep;
    else throw Error(ErrorKind::SchemaMismatch, "unknown method '" + method + "'");
    fit.m = j.at("m").get<int>();
    fit.lambda = j.at("lambda").get<double>();
    fit.gamma = j.at("gamma").get<double>();
    fit.objective = j.at("objective").get<double>();
    std::vector<Interval> intervals;
    for (const auto& pair : j.at("partition")) {
      intervals.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>(), fit.m);
    }
    fit.partition = Partition(std::move(intervals));
    for (const auto& m : j.at("models")) fit.models.push_back(model_from_json(m));
    if (fit.models.size() != fit.partition.size()) {
      throw Error(ErrorKind::SchemaMismatch, "model count differs from partition size");
    }
    out.propensity = propensity_from_json(j.at("propensity"), fit.partition);
    const json& prov = j.at("provenance");
    out.provenance.n = prov.at("n").get<std::size_t>();
    out.provenance.p = prov.at("p").get<std::size_t>();
    out.provenance.seed = prov.at("seed").get<std::uint64_t>();
    out.provenance.created_at = prov.at("created_at").get<std::string>();
    if (prov.contains("treatment_min")) {
      out.provenance.treatment_scale =
          TreatmentScale{prov.at("treatment_min").get<double>(),
                         prov.at("treatment_max").get<double>()};
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SchemaMismatch, std::string("malformed artifact: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorKind::SchemaMismatch, std::string("malformed artifact: ") + e.what());
  }
}

std::string dump_artifact(const ModelArtifact& artifact) {
  return to_json(artifact).dump(2) + "\n";
}

void save_artifact(const std::filesystem::path& path, const ModelArtifact& artifact) {
  write_atomic(path, dump_artifact(artifact));
}

ModelArtifact load_artifact(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SchemaMismatch, std::string("artifact is not JSON: ") + e.what());
  }
  return artifact_from_json(j);
}

}  // namespace jil::io
