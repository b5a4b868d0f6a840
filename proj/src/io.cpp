#include "sgqif/io.hpp"

#include "sgqif/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

namespace sgqif {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double x = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    reject("not a number: '" + std::string(text) + "'");
  return x;
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
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
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

long long parse_label(std::string_view text, const char* what, std::size_t line_no) {
  text = trim(text);
  long long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    reject("line " + std::to_string(line_no) + ": " + what + " must be an integer, got '" + std::string(text) + "'");
  return v;
}

// Header columns after subject,time,y must be e1..eq then x1..xp.
void parse_header(const std::vector<std::string_view>& cols, int& q, int& p) {
  if (cols.size() < 3 || trim(cols[0]) != "subject" || trim(cols[1]) != "time" || trim(cols[2]) != "y")
    reject("dataset header must start with subject,time,y");
  q = 0;
  p = 0;
  std::size_t c = 3;
  while (c < cols.size() && trim(cols[c]) == "e" + std::to_string(q + 1)) {
    ++q;
    ++c;
  }
  while (c < cols.size() && trim(cols[c]) == "x" + std::to_string(p + 1)) {
    ++p;
    ++c;
  }
  if (c != cols.size())
    reject("unexpected header column '" + std::string(trim(cols[c])) + "' (expected e1..eq then x1..xp)");
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return in;
}

}  // namespace

void write_dataset_csv(std::ostream& out, const LongitudinalDataset& data) {
  out << "subject,time,y";
  for (int u = 0; u < data.q; ++u) out << ",e" << u + 1;
  for (int v = 0; v < data.p; ++v) out << ",x" << v + 1;
  out << '\n';
  for (int i = 0; i < data.n; ++i) {
    for (int j = 0; j < data.k; ++j) {
      if (!data.observed(i, j)) continue;
      out << i + 1 << ',' << j + 1 << ',' << format_double(data.y(i, j));
      for (int u = 0; u < data.q; ++u) out << ',' << format_double(data.e(i, j, u));
      for (int v = 0; v < data.p; ++v) out << ',' << format_double(data.gen(i, v));
      out << '\n';
    }
  }
}

LongitudinalDataset read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  int q = 0, p = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) reject("dataset file is empty");
  parse_header(split_csv(line), q, p);
  const std::size_t width = 3 + static_cast<std::size_t>(q) + static_cast<std::size_t>(p);

  struct Row {
    int subject;
    long long time;
    std::vector<double> values;  // y, e..., x...
    std::size_t line_no;
  };
  std::vector<Row> rows;
  std::map<long long, int> subject_index;
  std::vector<long long> times;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cols = split_csv(line);
    if (cols.size() != width)
      reject("line " + std::to_string(line_no) + ": expected " + std::to_string(width) + " fields, got " +
             std::to_string(cols.size()));
    const long long label = parse_label(cols[0], "subject", line_no);
    auto [it, fresh] = subject_index.emplace(label, static_cast<int>(subject_index.size()));
    Row r{it->second, parse_label(cols[1], "time", line_no), {}, line_no};
    r.values.reserve(width - 2);
    for (std::size_t c = 2; c < width; ++c) {
      try {
        r.values.push_back(parse_double(cols[c]));
      } catch (const Error& e) {
        reject("line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    times.push_back(r.time);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) reject("dataset has no observations");
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  const int n = static_cast<int>(subject_index.size());
  const int k = static_cast<int>(times.size());
  LongitudinalDataset data = LongitudinalDataset::zeros(n, k, q, p);
  data.observed.setConstant(false);
  std::vector<bool> gen_set(n, false);
  for (const Row& r : rows) {
    const int j = static_cast<int>(std::lower_bound(times.begin(), times.end(), r.time) - times.begin());
    if (data.observed(r.subject, j))
      reject("line " + std::to_string(r.line_no) + ": duplicate row for subject/time");
    data.observed(r.subject, j) = true;
    data.y(r.subject, j) = r.values[0];
    for (int u = 0; u < q; ++u) data.e(r.subject, j, u) = r.values[1 + u];
    for (int v = 0; v < p; ++v) {
      const double x = r.values[1 + q + v];
      if (!gen_set[r.subject]) {
        data.gen(r.subject, v) = x;
      } else if (!(data.gen(r.subject, v) == x) && !(std::isnan(x) && std::isnan(data.gen(r.subject, v)))) {
        reject("line " + std::to_string(r.line_no) + ": x" + std::to_string(v + 1) +
               " changes within a subject (genetic factors are time-invariant)");
      }
    }
    gen_set[r.subject] = true;
  }
  return data;
}

void write_dataset_csv(const std::filesystem::path& path, const LongitudinalDataset& data) {
  std::ofstream out = open_out(path);
  write_dataset_csv(out, data);
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

LongitudinalDataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_dataset_csv(in);
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    reject(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& value) { write_text(path, value.dump(2) + "\n"); }

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out = open_out(path);
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

void to_json(Json& j, const ScenarioConfig& c) {
  j = Json{{"scenario", std::string(to_string(c.scenario))},
           {"n", c.n},
           {"k", c.k},
           {"p", c.p},
           {"q", c.q},
           {"rho_x", c.rho_x},
           {"tau", c.tau},
           {"maf", c.maf},
           {"r", c.r},
           {"n_true", c.n_true},
           {"coef_lo", c.coef_lo},
           {"coef_hi", c.coef_hi},
           {"time_varying_env", c.time_varying_env},
           {"missing_fraction", c.missing_fraction},
           {"seed", c.seed}};
}

namespace {
template <typename T>
void get_if(const Json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}
}  // namespace

void from_json(const Json& j, ScenarioConfig& c) {
  if (j.contains("scenario")) {
    const Json& s = j.at("scenario");
    c.scenario = parse_scenario(s.is_number() ? std::to_string(s.get<int>()) : s.get<std::string>());
  }
  get_if(j, "n", c.n);
  get_if(j, "k", c.k);
  get_if(j, "p", c.p);
  get_if(j, "q", c.q);
  get_if(j, "rho_x", c.rho_x);
  get_if(j, "tau", c.tau);
  get_if(j, "maf", c.maf);
  get_if(j, "r", c.r);
  get_if(j, "n_true", c.n_true);
  get_if(j, "coef_lo", c.coef_lo);
  get_if(j, "coef_hi", c.coef_hi);
  get_if(j, "time_varying_env", c.time_varying_env);
  get_if(j, "missing_fraction", c.missing_fraction);
  get_if(j, "seed", c.seed);
}

void to_json(Json& j, const PenaltySpec& s) {
  j = Json{{"kind", std::string(to_string(s.kind))},
           {"lambda1", s.lambda1},
           {"lambda2", s.lambda2},
           {"gamma", s.gamma},
           {"epsilon", s.epsilon}};
}

void from_json(const Json& j, PenaltySpec& s) {
  if (j.contains("kind")) s.kind = parse_penalty(j.at("kind").get<std::string>());
  get_if(j, "lambda1", s.lambda1);
  get_if(j, "lambda2", s.lambda2);
  get_if(j, "gamma", s.gamma);
  get_if(j, "epsilon", s.epsilon);
}

void to_json(Json& j, const TuningGrid& g) {
  j = Json{{"lambda1", g.lambda1}, {"lambda2", g.lambda2}, {"gamma", g.gamma}};
}

void from_json(const Json& j, TuningGrid& g) {
  get_if(j, "lambda1", g.lambda1);
  get_if(j, "lambda2", g.lambda2);
  get_if(j, "gamma", g.gamma);
}

void to_json(Json& j, const Selection& s) {
  Json inter = Json::array();
  for (const auto& [v, u] : s.inter) inter.push_back({v, u});
  j = Json{{"main", s.main}, {"inter", inter}};
}

void to_json(Json& j, const FitResult& f) {
  Json trace = Json::array();
  for (const auto& r : f.trace)
    trace.push_back({{"objective", r.objective},
                     {"frozen_objective", r.frozen_objective},
                     {"step", r.step},
                     {"mean_abs_change", r.mean_abs_change}});
  j = Json{{"beta_hat", std::vector<double>(f.beta_hat.data(), f.beta_hat.data() + f.beta_hat.size())},
           {"iterations", f.iterations},
           {"converged", f.converged},
           {"final_q", f.final_q},
           {"final_objective", f.final_objective},
           {"selected", f.selected},
           {"trace", trace},
           {"message", f.message}};
}

void to_json(Json& j, const GridCell& c) {
  j = Json{{"lambda1", c.lambda1}, {"lambda2", c.lambda2}, {"ok", c.ok}, {"iterations", c.iterations}};
  j["mse"] = std::isfinite(c.mse) ? Json(c.mse) : Json(nullptr);
  if (!c.message.empty()) j["message"] = c.message;
}

void to_json(Json& j, const GridReport& r) {
  j = Json{{"cells", r.cells},
           {"best", r.best},
           {"best_lambda1", r.best_lambda1},
           {"best_lambda2", r.best_lambda2},
           {"best_mse", r.best_mse},
           {"best_fit", r.best_fit}};
}

void to_json(Json& j, const CvReport& r) {
  j = Json{{"fold_of", r.fold_of},
           {"cells", r.cells},
           {"fold_mse", r.fold_mse},
           {"best", r.best},
           {"best_lambda1", r.best_lambda1},
           {"best_lambda2", r.best_lambda2}};
}

void to_json(Json& j, const MetricsReport& m) {
  j = Json{{"tp_main", m.tp_main},       {"fp_main", m.fp_main},       {"tp_inter", m.tp_inter},
           {"fp_inter", m.fp_inter},     {"tp_overall", m.tp_overall}, {"fp_overall", m.fp_overall},
           {"mse", m.mse}};
}

void to_json(Json& j, const ScreenReport& r) {
  j = Json{{"cutoff", r.cutoff}, {"min_p", r.min_p}, {"kept", r.kept}, {"warnings", r.warnings}};
}

Json truth_json(const SimulatedTruth& truth, const ScenarioConfig& config, std::uint64_t replicate) {
  Json inter = Json::array();
  for (const auto& [v, u] : truth.true_inter) inter.push_back({v, u});
  return Json{{"config", config},
              {"replicate", replicate},
              {"q", truth.layout.q},
              {"p", truth.layout.p},
              {"beta_true", std::vector<double>(truth.beta_true.data(), truth.beta_true.data() + truth.beta_true.size())},
              {"true_main", truth.true_main},
              {"true_inter", inter}};
}

Vector beta_from_json(const Json& j) {
  const Json& arr = j.contains("beta_true") ? j.at("beta_true") : j.contains("beta_hat") ? j.at("beta_hat") : j;
  if (!arr.is_array()) reject("expected a coefficient array (beta_true or beta_hat)");
  Vector beta(static_cast<Index>(arr.size()));
  for (std::size_t a = 0; a < arr.size(); ++a) beta(static_cast<Index>(a)) = arr[a].get<double>();
  return beta;
}

}  // namespace sgqif
