// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "blcd/config.hpp"
#include "blcd/experiment.hpp"

using namespace blcd;

namespace {

std::string write_temp(const std::string& body) {
  static int counter = 0;
  const std::string path =
      "/tmp/blcd_cfg_" + std::to_string(counter++) + ".conf";
  std::ofstream f(path);
  f << body;
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE_BEGIN("config");

TEST_CASE("minimal file fills defaults") {
  const auto path = write_temp("scheme=scheme2\n# comment\nT=10\n");
  const auto cfg = parse_config_file(path);
  CHECK(cfg.scheme == Scheme::scheme2);
  CHECK(cfg.T == 10);
  CHECK(cfg.rho == 1.0);
  CHECK(cfg.eval_interval == 50);
  CHECK(cfg.model == ModelKind::logreg);
  std::remove(path.c_str());
}

TEST_CASE("K larger than d is rejected naming both values") {
  const auto path = write_temp("features=4\nK=9\n");  // d = 5
  try {
    parse_config_file(path);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE(e.errors.size() == 1);
    CHECK(e.errors[0].find("K=9") != std::string::npos);
    CHECK(e.errors[0].find("d=5") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("unknown keys and malformed values are all reported") {
  const auto path = write_temp("bogus=1\ngamma=abc\nM=0\n");
  try {
    parse_config_file(path);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.errors.size() == 2);  // parse stage: unknown key + bad gamma
    CHECK(e.errors[0].find("bogus") != std::string::npos);
    CHECK(e.errors[1].find("gamma") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("exactly one of E_avg and E_list") {
  const auto path = write_temp("E_avg=0.5\nE_list=1,1,1,1,1,1,1,1\n");
  CHECK_THROWS_AS(parse_config_file(path), ConfigError);
  std::remove(path.c_str());
}

TEST_CASE("fig2 preset pins the headline parameters") {
  const auto cfg = preset("fig2");
  CHECK(cfg.M == 8);
  CHECK(cfg.K == 64);
  CHECK(cfg.batch_size == 4);
  CHECK(cfg.gamma == 0.01);
  CHECK(cfg.sigma2 == 1.0);
  CHECK(cfg.E_avg == 0.1);
  CHECK(cfg.fixed_alpha == 0.125);
  CHECK(cfg.K <= cfg.dim());
  CHECK(validate(cfg).empty());
  CHECK_THROWS_AS(preset("fig9"), ConfigError);
}

TEST_CASE("fig2 preset executes end to end at reduced length") {
  RunConfig cfg = preset("fig2");
  cfg.T = 20;
  cfg.eval_interval = 10;
  cfg.n_train = 400;
  cfg.n_test = 100;
  cfg.out = "/tmp/blcd_fig2_smoke.csv";
  const auto art = run_experiment(cfg);
  CHECK(art.result.traces.size() == 20);
  // the fixed receiver coefficient reaches the estimator: variance sigma2/64
  for (const auto& t : art.result.traces)
    CHECK(t.var_sum ==
          doctest::Approx(cfg.K * cfg.sigma2 * 0.125 * 0.125).epsilon(1e-12));
  std::remove(art.csv_path.c_str());
  std::remove(art.report_path.c_str());
}

TEST_CASE("budgets resolve from either form") {
  RunConfig cfg;
  cfg.M = 4;
  cfg.K = 16;
  cfg.sigma2 = 1.0;
  cfg.E_avg = 0.1;
  const auto b1 = cfg.budgets();
  REQUIRE(b1.per_device.size() == 4);
  CHECK(b1.per_device[0] ==
        doctest::Approx(energy_from_Eavg(0.1, 4, 16, 1.0,
                                         kRayleighSecondMoment)));
  cfg.E_avg.reset();
  cfg.E_list = {1, 2, 3, 4};
  CHECK(cfg.budgets().per_device == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("dimension derivation") {
  RunConfig cfg;
  cfg.model = ModelKind::logreg;
  cfg.features = 20;
  CHECK(cfg.dim() == 21);
  cfg.model = ModelKind::mlp;
  cfg.features = 16;
  cfg.hidden = 24;
  cfg.num_classes = 2;
  CHECK(cfg.dim() == 24 * 16 + 24 + 2 * 24 + 2);
}

TEST_CASE("experiment reruns are byte-identical") {
  RunConfig cfg;
  cfg.model = ModelKind::logreg;
  cfg.features = 8;
  cfg.n_train = 128;
  cfg.n_test = 64;
  cfg.M = 4;
  cfg.K = 5;
  cfg.T = 60;
  cfg.scheme = Scheme::scheme2;
  cfg.E_avg = 0.5;
  cfg.eval_interval = 20;
  cfg.out = "/tmp/blcd_repro_a.csv";
  const auto a = run_experiment(cfg);
  cfg.out = "/tmp/blcd_repro_b.csv";
  const auto b = run_experiment(cfg);
  CHECK(slurp(a.csv_path) == slurp(b.csv_path));
  CHECK(!slurp(a.csv_path).empty());
  CHECK(slurp(a.report_path) == slurp(b.report_path));
  std::remove(a.csv_path.c_str());
  std::remove(b.csv_path.c_str());
  std::remove((a.csv_path + ".report.json").c_str());
  std::remove((b.csv_path + ".report.json").c_str());
}

TEST_CASE("coupled schemes differ only in channel-dependent columns") {
  RunConfig cfg;
  cfg.model = ModelKind::logreg;
  cfg.features = 8;
  cfg.n_train = 128;
  cfg.n_test = 64;
  cfg.M = 4;
  cfg.K = 5;
  cfg.T = 40;
  cfg.eval_interval = 10;
  cfg.E_avg = 0.5;
  cfg.scheme = Scheme::error_free;
  cfg.out = "/tmp/blcd_pair_ef.csv";
  run_experiment(cfg);
  cfg.scheme = Scheme::scheme2;
  cfg.out = "/tmp/blcd_pair_s2.csv";
  run_experiment(cfg);

  std::ifstream fa("/tmp/blcd_pair_ef.csv"), fb("/tmp/blcd_pair_s2.csv");
  std::string la, lb;
  std::getline(fa, la);
  std::getline(fb, lb);
  CHECK(la == lb);  // header
  int rows = 0;
  while (std::getline(fa, la) && std::getline(fb, lb)) {
    // the round column is channel-independent
    CHECK(la.substr(0, la.find(',')) == lb.substr(0, lb.find(',')));
    ++rows;
  }
  CHECK(rows == 4 + 1);  // probes at 0,10,20,30 plus the final row
  CHECK_FALSE(std::getline(fb, lb));
  std::remove("/tmp/blcd_pair_ef.csv");
  std::remove("/tmp/blcd_pair_s2.csv");
  std::remove("/tmp/blcd_pair_ef.csv.report.json");
  std::remove("/tmp/blcd_pair_s2.csv.report.json");
}

TEST_CASE("experiments can load datasets from files") {
  const Dataset full = make_synthetic(120, 5, 2.0, 99);
  const auto [train, test] = split_dataset(full, 90);
  save_dataset("/tmp/blcd_file_ds.txt", train);
  save_dataset("/tmp/blcd_file_ds.txt.test", test);
  RunConfig cfg;
  cfg.model = ModelKind::logreg;
  cfg.dataset_path = "/tmp/blcd_file_ds.txt";
  cfg.features = 5;
  cfg.M = 3;
  cfg.K = 4;
  cfg.T = 10;
  cfg.eval_interval = 5;
  cfg.scheme = Scheme::scheme4;
  cfg.E_avg = 1.0;
  cfg.out = "/tmp/blcd_file_ds_run.csv";
  const auto art = run_experiment(cfg);
  CHECK(art.result.traces.size() == 10);
  for (const auto& p :
       {std::string("/tmp/blcd_file_ds.txt"),
        std::string("/tmp/blcd_file_ds.txt.test"), art.csv_path,
        art.report_path})
    std::remove(p.c_str());
}

TEST_CASE("sweeping the normalized energy writes separate artifacts") {
  RunConfig cfg;
  cfg.model = ModelKind::logreg;
  cfg.features = 6;
  cfg.n_train = 64;
  cfg.n_test = 32;
  cfg.M = 2;
  cfg.K = 3;
  cfg.T = 10;
  cfg.eval_interval = 5;
  cfg.scheme = Scheme::scheme2;
  int written = 0;
  for (double eavg : {0.1, 1.0, 10.0}) {
    cfg.E_avg = eavg;
    cfg.out = "/tmp/blcd_sweep_" + std::to_string(written) + ".csv";
    const auto art = run_experiment(cfg);
    CHECK(!slurp(art.csv_path).empty());
    std::remove(art.csv_path.c_str());
    std::remove(art.report_path.c_str());
    ++written;
  }
  CHECK(written == 3);
}

TEST_SUITE_END();
