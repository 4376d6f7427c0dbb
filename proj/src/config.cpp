#include "gps/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gps {
namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

// Strips a trailing comment that starts outside double quotes.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

struct Value {
  std::string raw;
  int line = 0;
};

int64_t as_int(const Value& v, const std::string& key) {
  int64_t out = 0;
  auto [p, ec] = std::from_chars(v.raw.data(), v.raw.data() + v.raw.size(), out);
  if (ec != std::errc{} || p != v.raw.data() + v.raw.size())
    fail(v.line, "key '" + key + "' expects an integer, got '" + v.raw + "'");
  return out;
}

uint64_t as_uint(const Value& v, const std::string& key) {
  uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.raw.data(), v.raw.data() + v.raw.size(), out);
  if (ec != std::errc{} || p != v.raw.data() + v.raw.size())
    fail(v.line, "key '" + key + "' expects an unsigned integer, got '" + v.raw + "'");
  return out;
}

double as_float(const Value& v, const std::string& key) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.raw.data(), v.raw.data() + v.raw.size(), out);
  if (ec != std::errc{} || p != v.raw.data() + v.raw.size() || !std::isfinite(out))
    fail(v.line, "key '" + key + "' expects a finite number, got '" + v.raw + "'");
  return out;
}

std::string as_string(const Value& v, const std::string& key) {
  if (v.raw.size() < 2 || v.raw.front() != '"' || v.raw.back() != '"')
    fail(v.line, "key '" + key + "' expects a quoted string, got '" + v.raw + "'");
  return v.raw.substr(1, v.raw.size() - 2);
}

std::vector<Value> as_array(const Value& v, const std::string& key) {
  if (v.raw.size() < 2 || v.raw.front() != '[' || v.raw.back() != ']')
    fail(v.line, "key '" + key + "' expects an array, got '" + v.raw + "'");
  std::vector<Value> out;
  std::string body = trim(v.raw.substr(1, v.raw.size() - 2));
  if (body.empty()) return out;
  std::vector<std::string> items;
  size_t pos = 0;
  while (true) {
    size_t comma = body.find(',', pos);
    items.push_back(trim(body.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (items.size() > 1 && items.back().empty()) items.pop_back();  // trailing comma
  for (const std::string& item : items) {
    if (item.empty()) fail(v.line, "key '" + key + "' has an empty array element");
    out.push_back({item, v.line});
  }
  return out;
}

}  // namespace

uint64_t fnv1a_hash(const std::string& text) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  cfg.config_hash = fnv1a_hash(text);

  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  std::vector<std::string> seen;  // "section.key" duplicates

  auto handle = [&](const std::string& key, const Value& v) {
    std::string full = section + "." + key;
    for (const std::string& s : seen)
      if (s == full) fail(v.line, "duplicate key '" + full + "'");
    seen.push_back(full);
    if (section == "kernel") {
      if (key == "alpha") cfg.kernel.alpha = as_float(v, full);
      else if (key == "family") cfg.kernel.family = as_string(v, full);
      else if (key == "c0") cfg.kernel.c0 = as_float(v, full);
      else if (key == "kappa") cfg.kernel.kappa = as_float(v, full);
      else if (key == "t_max") cfg.kernel.t_max = as_int(v, full);
      else fail(v.line, "unknown key '" + full + "'");
    } else if (section == "model") {
      if (key == "beta") cfg.model.beta = as_float(v, full);
      else if (key == "h") cfg.model.h = as_float(v, full);
      else if (key == "h_gap") cfg.model.h_gap = as_float(v, full);
      else if (key == "gamma_p") cfg.model.gamma_p = as_int(v, full);
      else if (key == "gamma_q") cfg.model.gamma_q = as_int(v, full);
      else if (key == "disorder") cfg.model.disorder = as_string(v, full);
      else if (key == "master_seed") cfg.model.master_seed = as_uint(v, full);
      else fail(v.line, "unknown key '" + full + "'");
    } else if (section == "run") {
      if (key == "N_list") {
        for (const Value& e : as_array(v, full))
          cfg.run.N_list.push_back(as_int(e, full));
      } else if (key == "replicas") cfg.run.replicas = as_int(v, full);
      else if (key == "budget") cfg.run.budget = as_float(v, full);
      else if (key == "threads") cfg.run.threads = as_int(v, full);
      else if (key == "out_dir") cfg.run.out_dir = as_string(v, full);
      else fail(v.line, "unknown key '" + full + "'");
    } else if (section == "certificate") {
      if (key == "delta") cfg.certificate.delta = as_float(v, full);
      else if (key == "k_scale") cfg.certificate.k_scale = as_int(v, full);
      else if (key == "epsilon") cfg.certificate.epsilon = as_float(v, full);
      else if (key == "lambda_list") {
        for (const Value& e : as_array(v, full))
          cfg.certificate.lambda_list.push_back(as_float(e, full));
      } else if (key == "ell_list") {
        for (const Value& e : as_array(v, full))
          cfg.certificate.ell_list.push_back(as_float(e, full));
      } else fail(v.line, "unknown key '" + full + "'");
    } else {
      fail(v.line, "key '" + key + "' outside any section");
    }
  };

  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "malformed section header '" + s + "'");
      section = trim(s.substr(1, s.size() - 2));
      if (section != "kernel" && section != "model" && section != "run" &&
          section != "certificate")
        fail(line, "unknown section '" + section + "'");
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected 'key = value', got '" + s + "'");
    std::string key = trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    if (key.empty() || val.empty()) fail(line, "empty key or value");
    handle(key, {val, line});
  }

  // Cross-field validation, still before any computation.
  if (cfg.kernel.alpha == 0.0)
    throw ConfigError("config: kernel.alpha is required");
  if (cfg.kernel.family != "constant" && cfg.kernel.family != "log_power")
    throw ConfigError("config: kernel.family must be \"constant\" or \"log_power\"");
  if (cfg.model.disorder != "gaussian" && cfg.model.disorder != "rademacher")
    throw ConfigError("config: model.disorder must be \"gaussian\" or \"rademacher\"");
  if (cfg.model.h && cfg.model.h_gap)
    throw ConfigError("config: model.h and model.h_gap are mutually exclusive");
  if (cfg.model.gamma_p < 1 || cfg.model.gamma_q < 1)
    throw ConfigError("config: model.gamma_p and model.gamma_q must be positive");
  if (!(cfg.model.beta >= 0.0))
    throw ConfigError("config: model.beta must be nonnegative");
  for (int64_t n : cfg.run.N_list)
    if (n < 1) throw ConfigError("config: run.N_list entries must be positive");
  if (cfg.run.replicas < 1)
    throw ConfigError("config: run.replicas must be positive");
  if (!(cfg.run.budget > 0.0))
    throw ConfigError("config: run.budget must be positive");
  if (cfg.run.threads < 0)
    throw ConfigError("config: run.threads must be nonnegative");
  if (!(cfg.certificate.delta > 0.0 && cfg.certificate.delta < 1.0))
    throw ConfigError("config: certificate.delta must lie in (0,1)");
  if (cfg.certificate.k_scale < 0)
    throw ConfigError("config: certificate.k_scale must be nonnegative");
  if (!(cfg.certificate.epsilon >= 0.0))
    throw ConfigError("config: certificate.epsilon must be nonnegative");
  if (cfg.certificate.lambda_list.empty() != cfg.certificate.ell_list.empty())
    throw ConfigError(
        "config: certificate.lambda_list and ell_list must be given together");
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

KernelSpec kernel_from_config(const KernelSection& k) {
  SvFamily fam = (k.family == "constant") ? SvFamily::constant : SvFamily::log_power;
  return build_kernel(k.alpha, {fam, k.c0, k.kappa}, k.t_max);
}

DisorderFamily disorder_from_config(const ModelSection& m) {
  return parse_disorder_family(m.disorder);
}

double resolve_h(const ModelSection& m) {
  if (m.h) return *m.h;
  if (m.h_gap)
    return -log_mgf(parse_disorder_family(m.disorder), m.beta) + *m.h_gap;
  throw ConfigError("config: one of model.h or model.h_gap is required");
}

}  // namespace gps
