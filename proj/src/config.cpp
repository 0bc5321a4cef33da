// SPDX-License-Identifier: Apache-2.0
#include "blcd/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "blcd/channel.hpp"

namespace blcd {

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += "; ";
    out += parts[i];
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& v, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(v, &pos);
    return pos == v.size();
  } catch (...) {
    return false;
  }
}

bool parse_long(const std::string& v, long& out) {
  try {
    std::size_t pos = 0;
    out = std::stol(v, &pos);
    return pos == v.size();
  } catch (...) {
    return false;
  }
}

}  // namespace

ConfigError::ConfigError(const std::vector<std::string>& errs)
    : std::runtime_error("invalid configuration: " + join(errs)),
      errors(errs) {}

int RunConfig::dim() const {
  if (model == ModelKind::logreg) return features + 1;
  return hidden * features + hidden + num_classes * hidden + num_classes;
}

PowerBudget RunConfig::budgets() const {
  if (!E_list.empty()) return {E_list};
  const double E = energy_from_Eavg(E_avg.value_or(0.1), M, K, sigma2,
                                    kRayleighSecondMoment);
  return {std::vector<double>(M, E)};
}

void apply_config_entries(
    RunConfig& cfg,
    const std::vector<std::pair<std::string, std::string>>& kv) {
  std::vector<std::string> errors;
  for (const auto& [key, raw] : kv) {
    const std::string value = trim(raw);
    auto bad = [&](const std::string& why) {
      errors.push_back("key '" + key + "': " + why + " (got '" + value + "')");
    };
    long l = 0;
    double d = 0.0;
    if (key == "model") {
      if (value == "logreg")
        cfg.model = ModelKind::logreg;
      else if (value == "mlp")
        cfg.model = ModelKind::mlp;
      else
        bad("expected logreg or mlp");
    } else if (key == "scheme") {
      if (auto s = scheme_from_string(value))
        cfg.scheme = *s;
      else
        bad("unknown scheme");
    } else if (key == "selection") {
      if (value == "uniform")
        cfg.selection = SelectionKind::uniform;
      else if (value == "top_k")
        cfg.selection = SelectionKind::top_k;
      else
        bad("expected uniform or top_k");
    } else if (key == "n_train") {
      parse_long(value, l) ? void(cfg.n_train = l) : bad("expected integer");
    } else if (key == "n_test") {
      parse_long(value, l) ? void(cfg.n_test = l) : bad("expected integer");
    } else if (key == "features") {
      parse_long(value, l) ? void(cfg.features = l) : bad("expected integer");
    } else if (key == "hidden") {
      parse_long(value, l) ? void(cfg.hidden = l) : bad("expected integer");
    } else if (key == "num_classes") {
      parse_long(value, l) ? void(cfg.num_classes = l) : bad("expected integer");
    } else if (key == "M") {
      parse_long(value, l) ? void(cfg.M = l) : bad("expected integer");
    } else if (key == "K") {
      parse_long(value, l) ? void(cfg.K = l) : bad("expected integer");
    } else if (key == "T") {
      parse_long(value, l) ? void(cfg.T = l) : bad("expected integer");
    } else if (key == "batch_size") {
      parse_long(value, l) ? void(cfg.batch_size = l) : bad("expected integer");
    } else if (key == "eval_interval") {
      parse_long(value, l) ? void(cfg.eval_interval = l) : bad("expected integer");
    } else if (key == "seed") {
      parse_long(value, l) ? void(cfg.seed = static_cast<std::uint64_t>(l))
                           : bad("expected integer");
    } else if (key == "margin") {
      parse_double(value, d) ? void(cfg.margin = d) : bad("expected number");
    } else if (key == "l2") {
      parse_double(value, d) ? void(cfg.l2 = d) : bad("expected number");
    } else if (key == "gamma") {
      parse_double(value, d) ? void(cfg.gamma = d) : bad("expected number");
    } else if (key == "sigma2") {
      parse_double(value, d) ? void(cfg.sigma2 = d) : bad("expected number");
    } else if (key == "rho") {
      parse_double(value, d) ? void(cfg.rho = d) : bad("expected number");
    } else if (key == "g2_safety") {
      parse_double(value, d) ? void(cfg.g2_safety = d) : bad("expected number");
    } else if (key == "E_avg") {
      parse_double(value, d) ? void(cfg.E_avg = d) : bad("expected number");
    } else if (key == "fixed_alpha") {
      parse_double(value, d) ? void(cfg.fixed_alpha = d) : bad("expected number");
    } else if (key == "receiver_centric_p") {
      parse_double(value, d) ? void(cfg.receiver_centric_p = d)
                             : bad("expected number");
    } else if (key == "E_list") {
      std::vector<double> list;
      std::stringstream ss(value);
      std::string item;
      bool ok = true;
      while (std::getline(ss, item, ',')) {
        double e = 0.0;
        if (!parse_double(trim(item), e)) {
          ok = false;
          break;
        }
        list.push_back(e);
      }
      ok && !list.empty() ? void(cfg.E_list = list)
                          : bad("expected comma-separated numbers");
    } else if (key == "dataset") {
      cfg.dataset_path = value;
    } else if (key == "out") {
      cfg.out = value;
    } else if (key == "scheme1_outer_iters") {
      parse_long(value, l) ? void(cfg.scheme1_outer_iters = l)
                           : bad("expected integer");
    } else if (key == "scheme1_b_iters") {
      parse_long(value, l) ? void(cfg.scheme1_b_iters = l)
                           : bad("expected integer");
    } else if (key == "scheme1_tol") {
      parse_double(value, d) ? void(cfg.scheme1_tol = d) : bad("expected number");
    } else {
      errors.push_back("unknown key '" + key + "'");
    }
  }
  if (!errors.empty()) throw ConfigError(errors);
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError({"cannot open config file '" + path + "'"});
  std::vector<std::pair<std::string, std::string>> kv;
  std::vector<std::string> errors;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) +
                       ": expected key=value, got '" + line + "'");
      continue;
    }
    kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  if (!errors.empty()) throw ConfigError(errors);
  RunConfig cfg;
  apply_config_entries(cfg, kv);
  const auto verrors = validate(cfg);
  if (!verrors.empty()) throw ConfigError(verrors);
  return cfg;
}

std::vector<std::string> validate(const RunConfig& cfg) {
  std::vector<std::string> errors;
  if (cfg.n_train < 1) errors.push_back("n_train must be >= 1");
  if (cfg.n_test < 1) errors.push_back("n_test must be >= 1");
  if (cfg.features < 1) errors.push_back("features must be >= 1");
  if (cfg.model == ModelKind::mlp) {
    if (cfg.hidden < 1) errors.push_back("hidden must be >= 1");
    if (cfg.num_classes < 2) errors.push_back("num_classes must be >= 2");
  }
  if (cfg.M < 1) errors.push_back("M must be >= 1");
  if (cfg.K < 1) errors.push_back("K must be >= 1");
  if (cfg.K > cfg.dim())
    errors.push_back("K=" + std::to_string(cfg.K) +
                     " exceeds model dimension d=" + std::to_string(cfg.dim()));
  if (cfg.T < 0) errors.push_back("T must be >= 0");
  if (cfg.batch_size < 1) errors.push_back("batch_size must be >= 1");
  if (!(cfg.gamma > 0.0)) errors.push_back("gamma must be > 0");
  if (!(cfg.sigma2 > 0.0)) errors.push_back("sigma2 must be > 0");
  if (!(cfg.rho > 0.0 && cfg.rho < 2.0)) errors.push_back("rho must be in (0, 2)");
  if (cfg.eval_interval < 1) errors.push_back("eval_interval must be >= 1");
  if (cfg.E_avg && !cfg.E_list.empty())
    errors.push_back("set exactly one of E_avg and E_list, not both");
  if (cfg.E_avg && !(*cfg.E_avg > 0.0)) errors.push_back("E_avg must be > 0");
  for (double e : cfg.E_list)
    if (!(e >= 0.0)) errors.push_back("E_list entries must be >= 0");
  if (!cfg.E_list.empty() && static_cast<int>(cfg.E_list.size()) != cfg.M)
    errors.push_back("E_list length " + std::to_string(cfg.E_list.size()) +
                     " does not match M=" + std::to_string(cfg.M));
  if (cfg.fixed_alpha && !(*cfg.fixed_alpha >= 0.0))
    errors.push_back("fixed_alpha must be >= 0");
  if (cfg.n_train < cfg.M)
    errors.push_back("n_train must be >= M so every device has data");
  return errors;
}

RunConfig preset(const std::string& name) {
  if (name == "fig2") {
    RunConfig cfg;
    cfg.model = ModelKind::mlp;
    cfg.features = 16;
    cfg.hidden = 24;
    cfg.num_classes = 2;
    cfg.n_train = 2000;
    cfg.n_test = 1000;
    cfg.margin = 2.0;
    cfg.M = 8;
    cfg.K = 64;
    cfg.batch_size = 4;
    cfg.gamma = 0.01;
    cfg.sigma2 = 1.0;
    cfg.E_avg = 0.1;
    cfg.fixed_alpha = 0.125;  // alpha_k = 1/M
    cfg.T = 2000;
    cfg.scheme = Scheme::scheme2;
    cfg.out = "fig2.csv";
    return cfg;
  }
  throw ConfigError({"unknown preset '" + name + "'"});
}

}  // namespace blcd
