#include "coagdiff/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace coagdiff {

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string unquote(std::string s) {
  s = trim(std::move(s));
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

Config Config::parse(std::istream& in, const std::string& source) {
  // '#' comments are accepted alongside ';'
  std::stringstream text;
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find_first_not_of(" \t");
    if (pos != std::string::npos && line[pos] == '#') line[pos] = ';';
    text << line << '\n';
  }
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(text, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  Config cfg;
  cfg.source_ = source;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError(source + ": key '" + section + "' must appear inside a [section]");
    }
    for (const auto& [key, node] : body) cfg.entries_[section + "." + key] = unquote(node.data());
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse(in, path.string());
}

void Config::set(const std::string& key, const std::string& value) {
  if (key.find('.') == std::string::npos || key.front() == '.' || key.back() == '.') {
    throw ConfigError("override '" + key + "' must have the form section.key");
  }
  entries_[key] = unquote(value);
}

void Config::merge(const Config& other) {
  for (const auto& [k, v] : other.entries_) entries_[k] = v;
  if (other.source_ != "<defaults>") source_ = other.source_;
}

void Config::fail(const std::string& key, const std::string& what) const {
  const auto it = entries_.find(key);
  std::string msg = source_ + ": [" + key.substr(0, key.find('.')) + "] " + key.substr(key.find('.') + 1) + ": " + what;
  if (it != entries_.end()) msg += " (got '" + it->second + "')";
  throw ConfigError(msg);
}

std::optional<std::string> Config::raw(const std::string& key) const {
  used_.insert(key);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return raw(key).value_or(fallback);
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto r = raw(key);
  if (!r) return fallback;
  const auto v = to_double(*r);
  if (!v) fail(key, "expected a number");
  return *v;
}

std::size_t Config::get_size(const std::string& key, std::size_t fallback) const {
  const auto r = raw(key);
  if (!r) return fallback;
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(r->data(), r->data() + r->size(), v);
  if (ec != std::errc() || ptr != r->data() + r->size() || r->empty()) fail(key, "expected a non-negative integer");
  return v;
}

std::uint64_t Config::get_seed(const std::string& key, std::uint64_t fallback) const {
  return static_cast<std::uint64_t>(get_size(key, static_cast<std::size_t>(fallback)));
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto r = raw(key);
  if (!r) return fallback;
  if (*r == "true" || *r == "1" || *r == "yes" || *r == "on") return true;
  if (*r == "false" || *r == "0" || *r == "no" || *r == "off") return false;
  fail(key, "expected true or false");
}

std::vector<double> Config::get_list(const std::string& key, const std::vector<double>& fallback) const {
  const auto r = raw(key);
  if (!r) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(*r)) {
    const auto v = to_double(item);
    if (!v) fail(key, "expected a comma-separated list of numbers");
    out.push_back(*v);
  }
  return out;
}

std::vector<std::size_t> Config::get_size_list(const std::string& key,
                                               const std::vector<std::size_t>& fallback) const {
  const auto r = raw(key);
  if (!r) return fallback;
  std::vector<std::size_t> out;
  for (const auto& item : split_list(*r)) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      fail(key, "expected a comma-separated list of integers");
    }
    out.push_back(v);
  }
  return out;
}

void Config::require_all_used() const {
  std::string unknown;
  for (const auto& [k, v] : entries_) {
    if (!used_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
  }
  if (!unknown.empty()) throw ConfigError(source_ + ": unknown keys: " + unknown);
}

SimConfig sim_config_from(const Config& cfg) {
  SimConfig sc;
  auto wrap = [&](const std::string& key, auto&& fn) {
    try {
      return fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(cfg.source() + ": [" + key + "] " + e.what());
    }
  };

  const std::string kfam = cfg.get_string("kernel.family", "sum_power");
  sc.kernel = wrap("kernel", [&] {
    if (kfam == "constant") return KernelSpec::constant(cfg.get_double("kernel.c0", 1.0));
    if (kfam == "sum_power") {
      return KernelSpec::sum_power(cfg.get_double("kernel.C", 1.0), cfg.get_double("kernel.gamma", 0.5));
    }
    if (kfam == "product_power") {
      return KernelSpec::product_power(cfg.get_double("kernel.C", 1.0), cfg.get_double("kernel.alpha", 0.5),
                                       cfg.get_double("kernel.beta", 0.5));
    }
    if (kfam == "multiplicative") return KernelSpec::multiplicative();
    if (kfam == "table") {
      const auto path = cfg.raw("kernel.path");
      if (!path) throw ConfigError(cfg.source() + ": [kernel] path: required for the table family");
      return KernelSpec::load_table_csv(*path);
    }
    throw ConfigError(cfg.source() + ": [kernel] family: unknown kernel family '" + kfam + "'");
  });

  const std::string dfam = cfg.get_string("diffusion.family", "limit");
  sc.diffusion = wrap("diffusion", [&] {
    const diffusion_family::Limit tail{cfg.get_double("diffusion.d_inf", 1.0), cfg.get_double("diffusion.A", 1.0),
                                       cfg.get_double("diffusion.r", 1.0)};
    if (dfam == "constant") return DiffusionProfile::constant(cfg.get_double("diffusion.d", 1.0));
    if (dfam == "limit") return DiffusionProfile(tail);
    if (dfam == "list") {
      return DiffusionProfile(diffusion_family::ExplicitList{cfg.get_list("diffusion.values", {}), tail});
    }
    throw ConfigError(cfg.source() + ": [diffusion] family: unknown diffusion family '" + dfam + "'");
  });

  sc.n = cfg.get_size("grid.n", sc.n);
  sc.cells = cfg.get_size("grid.N", sc.cells);
  sc.T = cfg.get_double("time.T", sc.T);
  sc.dt = cfg.get_double("time.dt", sc.dt);

  const std::string ifam = cfg.get_string("initial.family", "geometric");
  if (ifam == "monodisperse") {
    sc.initial.family = InitialData::Family::Monodisperse;
  } else if (ifam == "geometric") {
    sc.initial.family = InitialData::Family::Geometric;
  } else if (ifam == "table") {
    sc.initial.family = InitialData::Family::Table;
    const auto path = cfg.raw("initial.path");
    if (!path) throw ConfigError(cfg.source() + ": [initial] path: required for the table family");
    sc.initial.table = *path;
  } else {
    throw ConfigError(cfg.source() + ": [initial] family: unknown initial family '" + ifam + "'");
  }
  sc.initial.rho0 = cfg.get_double("initial.rho0", sc.initial.rho0);
  sc.initial.amplitude = cfg.get_double("initial.amplitude", sc.initial.amplitude);
  sc.initial.ratio = cfg.get_double("initial.ratio", sc.initial.ratio);

  const std::string scheme = cfg.get_string("reaction.scheme", "rk4");
  if (scheme == "rk4") {
    sc.scheme = ReactionScheme::ExplicitRK4;
  } else if (scheme == "semi_implicit") {
    sc.scheme = ReactionScheme::SemiImplicitLoss;
  } else {
    throw ConfigError(cfg.source() + ": [reaction] scheme: expected rk4 or semi_implicit (got '" + scheme + "')");
  }
  const std::string eval = cfg.get_string("reaction.evaluator", "direct");
  if (eval == "direct") {
    sc.evaluator = GainEvaluator::Direct;
  } else if (eval == "fft") {
    sc.evaluator = GainEvaluator::Fft;
  } else {
    throw ConfigError(cfg.source() + ": [reaction] evaluator: expected direct or fft (got '" + eval + "')");
  }
  sc.rk4_rate_cap = cfg.get_double("reaction.rate_cap", sc.rk4_rate_cap);
  sc.negativity_tolerance = cfg.get_double("reaction.negativity_tolerance", sc.negativity_tolerance);
  sc.max_halvings = static_cast<int>(cfg.get_size("reaction.max_halvings", static_cast<std::size_t>(sc.max_halvings)));

  sc.output_stride = cfg.get_size("output.stride", sc.output_stride);
  sc.store_states = cfg.get_bool("output.store_states", sc.store_states);
  sc.moment_orders = cfg.get_list("output.moments", sc.moment_orders);
  sc.norm_exponents = cfg.get_list("output.norms", sc.norm_exponents);

  if (cfg.has("diagnostics.tail_index")) sc.tail_index = cfg.get_size("diagnostics.tail_index", 1);
  sc.tail_closeness = cfg.get_double("diagnostics.tail_closeness", sc.tail_closeness);
  sc.tracked_species = cfg.get_size("diagnostics.tracked_species", sc.tracked_species);
  return sc;
}

Config overrides_from_args(const std::vector<std::string>& args) {
  Config out;
  for (std::size_t k = 0; k < args.size(); ++k) {
    const std::string& a = args[k];
    if (a.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + a + "'");
    std::string key = a.substr(2);
    std::string value;
    const auto eq = key.find('=');
    if (eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (k + 1 >= args.size()) throw ConfigError("override --" + key + " needs a value");
      value = args[++k];
    }
    out.set(key, value);
  }
  return out;
}

}  // namespace coagdiff
