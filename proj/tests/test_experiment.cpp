#include <doctest.h>

#include "bernstab/errors.hpp"
#include "bernstab/experiment.hpp"
#include "bernstab/parallel.hpp"

using namespace bernstab;

namespace {

json config(const std::string& kind, json params, std::uint64_t seed = 1) {
  return json{{"schema_version", 1}, {"kind", kind}, {"seed", seed}, {"params", std::move(params)}};
}

json gauss1(double mean, double var) { return json{{"type", "gaussian"}, {"mean", {mean}}, {"cov", {{var}}}}; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("schema validation") {
    CHECK_THROWS_AS(run_experiment(json{{"schema_version", 2}, {"kind", "cf-axioms"}}), ConfigError);
    CHECK_THROWS_AS(run_experiment(json{{"schema_version", 1}, {"kind", "nope"}}), ConfigError);
    CHECK_THROWS_AS(run_experiment(json{{"schema_version", 1}, {"kind", "cf-axioms"}, {"extra", 1}}), ConfigError);
    CHECK_THROWS_AS(run_experiment(config("cf-axioms", {{"n_random", 5}, {"typo", 1}})), ConfigError);
    CHECK_THROWS_AS(run_experiment(config("cf-axioms", {{"n_random", 0}})), std::invalid_argument);
    CHECK_THROWS_AS(run_experiment(config("bernstein-fit", {{"x1", {{"type", "weird"}}}, {"x2", gauss1(0, 1)}})),
                    ConfigError);
  }

  TEST_CASE("cf-axioms passes on a small corpus") {
    const ExperimentResult r = run_experiment(config("cf-axioms", {{"n_random", 20}, {"n_freq", 10}}));
    CHECK(r.passed);
    CHECK(r.report["assertions"].size() == 3);
    CHECK(r.csv.rfind("index,dim,origin_error,modulus_excess,conjugate_error\r\n", 0) == 0);
  }

  TEST_CASE("bernstein-fit on an iid Gaussian config recovers Q") {
    const json p = {{"x1", gauss1(0.0, 1.5)}, {"x2", gauss1(0.0, 1.5)}, {"T", 1.0},
                    {"expect", {{"Q", {{1.5}}}, {"tol", 1e-8}}}};
    const ExperimentResult r = run_experiment(config("bernstein-fit", p));
    CHECK(r.passed);
    CHECK(r.report["result"]["surrogate"]["Q_hat"][0][0].get<double>() == doctest::Approx(1.5).epsilon(1e-8));
  }

  TEST_CASE("a failed assertion names its anchor") {
    const json p = {{"x1", gauss1(0.0, 1.0)}, {"x2", gauss1(0.0, 1.0)}, {"extend", false},
                    {"expect", {{"Q", {{2.0}}}}}};
    const ExperimentResult r = run_experiment(config("bernstein-fit", p));
    CHECK_FALSE(r.passed);
    bool named = false;
    for (const auto& a : r.report["assertions"])
      if (!a["passed"].get<bool>()) named = a["anchor"].get<std::string>() == "recovered common covariance";
    CHECK(named);
  }

  TEST_CASE("library errors become failed assertions") {
    const json bpsk = {{"type", "atoms"}, {"points", {-1.0, 1.0}}, {"weights", {0.5, 0.5}}};
    const ExperimentResult r = run_experiment(config("bernstein-fit", {{"x1", bpsk}, {"x2", bpsk}, {"T", 1.0}}));
    CHECK_FALSE(r.passed);
    CHECK(r.report["assertions"][0]["anchor"].get<std::string>().find("ThresholdExceeded") != std::string::npos);
  }

  TEST_CASE("challenge with seed 42 populates the gap column") {
    const json p = {{"problem", {{"lambda", 2.0}, {"Q", {{1.0}}}, {"G1", {{2.0}}}, {"G2", {{1.0}}}}}, {"n", 500}};
    const ExperimentResult r = run_experiment(config("challenge", p, 42));
    CHECK(r.passed);
    CHECK(r.csv.rfind("index,letters,value,gap\r\n", 0) == 0);
    std::size_t lines = 0;
    for (char c : r.csv) lines += c == '\n';
    CHECK(lines == 501);
  }

  TEST_CASE("seed override and thread count leave reports deterministic") {
    const json c = config("cf-axioms", {{"n_random", 30}, {"n_freq", 5}}, 3);
    set_worker_count(1);
    const std::string a = run_experiment(c).report.dump(2);
    set_worker_count(4);
    const std::string b = run_experiment(c).report.dump(2);
    set_worker_count(1);
    CHECK(a == b);
    CHECK(run_experiment(c, 99).report["seed"].get<std::uint64_t>() == 99);
  }

  TEST_CASE("CSV quoting follows RFC 4180") {
    CsvTable t({"a", "b"});
    t.add_row({"x,y", "say \"hi\""});
    CHECK(t.str() == "a,b\r\n\"x,y\",\"say \"\"hi\"\"\"\r\n");
    CHECK(CsvTable::field(0.1) == "0.1");
    CHECK_THROWS(t.add_row({"only one"}));
  }

  TEST_CASE("distribution JSON round-trips") {
    Rng rng(8);
    for (int k = 0; k < 20; ++k) {
      const Distribution d = random_distribution(rng, 2);
      const json j = json::parse(to_json(d).dump());
      const Distribution back = distribution_from_json(j);
      const Vec t = Vec::Constant(2, 0.37);
      CHECK(std::abs(cf_eval(d, t) - cf_eval(back, t)) < 1e-15);
    }
  }
}
