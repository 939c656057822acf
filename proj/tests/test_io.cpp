#include <clocale>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <locale>
#include <random>
#include <sstream>

#include "cohimpact/cli.hpp"
#include "cohimpact/config.hpp"
#include "cohimpact/emit.hpp"
#include "cohimpact/errors.hpp"
#include "cohimpact/units.hpp"
#include "doctest.h"

using namespace cohimpact;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cohimpact-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string out, err;
};

Run cli_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("double formatting round-trips bit for bit") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    const double x = u(rng) * std::pow(10.0, (k % 40) - 20);
    CHECK(emit::parse_double(emit::format_double(x)) == x);
  }
  for (double x : {0.0, -0.0, 1e-310, std::numeric_limits<double>::max(), 0.1})
    CHECK(emit::parse_double(emit::format_double(x)) == x);
  CHECK(emit::format_double(std::nan("")) == "nan");
  CHECK(emit::format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(std::isnan(emit::parse_double("nan")));
  CHECK(emit::parse_double("-inf") == -std::numeric_limits<double>::infinity());
  CHECK_THROWS(emit::parse_double("1.5x"));
}

TEST_CASE("decimal point is locale independent") {
  const char* saved = std::setlocale(LC_ALL, nullptr);
  const std::string keep = saved ? saved : "C";
  bool switched = false;
  for (const char* loc : {"de_DE.UTF-8", "de_DE.utf8", "fr_FR.UTF-8"})
    if (std::setlocale(LC_ALL, loc)) {
      switched = true;
      break;
    }
  CHECK(emit::format_double(1.5) == "1.5");
  CHECK(emit::parse_double("2.25") == 2.25);
  std::setlocale(LC_ALL, keep.c_str());
  if (!switched) MESSAGE("no comma-decimal C locale installed; relying on the facet check");

  struct Comma : std::numpunct<char> {
    char do_decimal_point() const override { return ','; }
  };
  const std::locale old = std::locale::global(std::locale(std::locale::classic(), new Comma));
  emit::Table t{"demo", {"x"}, {}};
  t.add({0.5});
  CHECK(emit::to_csv(t) == "x\n0.5\n");
  CHECK(emit::to_json(t).dump().find("0.5") != std::string::npos);
  CHECK(Config::parse("J = 1.5 ps^-1\n").energy("J") == 1.5);
  std::locale::global(old);
}

TEST_CASE("csv tables") {
  emit::Table t{"demo", {"x", "n", "ok", "label"}, {}};
  CHECK(emit::to_csv(t) == "x,n,ok,label\n");
  t.add({0.1, std::int64_t{3}, true, std::string("plain")});
  t.add({-2.5e-300, std::int64_t{-7}, false, std::string("has,comma \"q\"")});
  t.add({std::nan(""), std::int64_t{0}, true, std::string("")});
  const std::string csv = emit::to_csv(t);
  const emit::Table back = emit::from_csv(csv, "demo");
  REQUIRE(back.rows.size() == 3);
  CHECK(back.columns == t.columns);
  CHECK(std::get<double>(back.rows[0][0]) == 0.1);
  CHECK(std::get<std::int64_t>(back.rows[1][1]) == -7);
  CHECK(std::get<bool>(back.rows[1][2]) == false);
  CHECK(std::get<std::string>(back.rows[1][3]) == "has,comma \"q\"");
  CHECK(std::isnan(std::get<double>(back.rows[2][0])));
  CHECK(emit::to_csv(back) == csv);
  CHECK_THROWS(t.add({1.0}));
  CHECK(emit::from_csv("a,b\n").rows.empty());
}

TEST_CASE("json documents carry a schema version") {
  emit::Table t{"demo", {"x", "s"}, {}};
  t.add({std::numeric_limits<double>::infinity(), std::string("a")});
  t.add({0.30000000000000004, std::string("b")});
  const auto j = emit::to_json(t);
  CHECK(j["schema_version"] == emit::kSchemaVersion);
  CHECK(j["schema"] == "demo");
  CHECK(j["rows"][0][0] == "inf");
  CHECK(j["rows"][1][0].get<double>() == 0.30000000000000004);
  const auto parsed = nlohmann::json::parse(j.dump());
  CHECK(parsed["rows"][1][0].get<double>() == 0.30000000000000004);
  const auto d = emit::document("fit", {{"mu", 1.5}});
  CHECK(d["schema_version"] == emit::kSchemaVersion);
  CHECK(d["mu"] == 1.5);
  CHECK(emit::parse_format("json") == emit::Format::json);
  CHECK_THROWS(emit::parse_format("xml"));
}

TEST_CASE("config parsing and units") {
  const Config c = Config::parse(
      "# dimer\n"
      "J = 100 cm^-1\n"
      "T = 300 K\n"
      "tau_c = 53.1 fs\n"
      "kappa = 1 ps^-1\n"
      "sizes = 5, 10, 50\n"
      "energies = 0, 50, 100 cm^-1\n"
      "engine = heom   # trailing comment\n",
      "demo.cfg");
  CHECK(c.energy("J") == doctest::Approx(units::wavenumber(100)).epsilon(1e-15));
  CHECK(c.energy("T") == doctest::Approx(units::kelvin(300)).epsilon(1e-15));
  CHECK(c.time("tau_c") == doctest::Approx(0.0531).epsilon(1e-15));
  CHECK(c.energy("kappa") == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(c.numbers("sizes") == std::vector<double>{5, 10, 50});
  CHECK(c.energies("energies")[2] == doctest::Approx(units::wavenumber(100)).epsilon(1e-15));
  CHECK(c.word_or("engine", "x") == "heom");
  CHECK(c.integer_or("missing", 4) == 4);
  CHECK_NOTHROW(c.require_known({"J", "T", "tau_c", "kappa", "sizes", "energies", "engine"}));
  CHECK(Config::parse("").empty());
}

TEST_CASE("config diagnostics name the line and field") {
  auto message = [](const std::string& text, auto&& probe) {
    try {
      probe(Config::parse(text, "s.cfg"));
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  const auto noop = [](const Config&) {};
  CHECK(message("J = 1 cm^-1\nJ = 2 cm^-1\n", noop).find("s.cfg:2") != std::string::npos);
  CHECK(message("J = 1 furlong\n", noop).find("s.cfg:1") != std::string::npos);
  CHECK(message("no equals sign\n", noop).find("s.cfg:1") != std::string::npos);
  const std::string unk = message("J = 1 cm^-1\nbogus = 3\n", [](const Config& c) { c.require_known({"J"}); });
  CHECK(unk.find("bogus") != std::string::npos);
  CHECK(unk.find("s.cfg:2") != std::string::npos);
  // Times and rates convert by reciprocal.
  CHECK(Config::parse("k = 5 fs\n").energy("k") == doctest::Approx(200.0).epsilon(1e-14));
  CHECK(Config::parse("tau = 2 ps^-1\n").time("tau") == doctest::Approx(0.5).epsilon(1e-14));
  const std::string word = message("J = fast\n", [](const Config& c) { (void)c.energy("J"); });
  CHECK(word.find("J") != std::string::npos);
  CHECK(word.find("s.cfg:1") != std::string::npos);
}

TEST_CASE("command line exit codes") {
  const fs::path dir = scratch_dir("cli");
  SUBCASE("usage errors") {
    CHECK(cli_run({}).code == cli::kUsage);
    CHECK(cli_run({"no-such-command"}).code == cli::kUsage);
    CHECK(cli_run({"verify", "--format", "xml"}).code == cli::kUsage);
    const fs::path empty = write_file(dir, "empty.cfg", "# nothing here\n");
    CHECK(cli_run({"chain-impact", "--config", empty.string(), "--out", dir.string()}).code == cli::kUsage);
    const fs::path bogus = write_file(dir, "bogus.cfg", "J = 100 cm^-1\nbogus = 3\n");
    const Run r = cli_run({"chain-bounds", "--config", bogus.string(), "--out", dir.string()});
    CHECK(r.code == cli::kUsage);
    CHECK(r.err.find("bogus") != std::string::npos);
    CHECK(r.err.find(":2") != std::string::npos);
    CHECK(cli_run({"lightcone", "--config", (dir / "absent.cfg").string()}).code == cli::kUsage);
  }
  SUBCASE("verify succeeds and is reproducible") {
    const std::vector<std::string> args{"verify", "--instances", "12", "--seed", "7", "--falsify", "2",
                                        "--samples", "2000", "--out", dir.string()};
    REQUIRE(cli_run(args).code == cli::kSuccess);
    const std::string first = slurp(dir / "verify.json");
    const auto j = nlohmann::json::parse(first);
    CHECK(j["pass"] == true);
    CHECK(j["violations"] == 0);
    CHECK(j["schema_version"] == emit::kSchemaVersion);
    CHECK(j.contains("min_margin"));
    REQUIRE(cli_run(args).code == cli::kSuccess);
    CHECK(slurp(dir / "verify.json") == first);
  }
  SUBCASE("tabular output in both formats") {
    REQUIRE(cli_run({"dimer-efficiency", "--out", dir.string()}).code == cli::kSuccess);
    const emit::Table t = emit::from_csv(slurp(dir / "dimer-efficiency.csv"));
    CHECK(t.columns.front() == "gamma_eff_ps");
    CHECK(t.rows.size() == 50);
    auto number = [](const emit::Cell& c) {
      return std::holds_alternative<double>(c) ? std::get<double>(c) : double(std::get<std::int64_t>(c));
    };
    CHECK(number(t.rows.front()[0]) == 1.0);
    CHECK(number(t.rows.back()[0]) == 1000.0);
    REQUIRE(cli_run({"dimer-gate", "--out", dir.string(), "--format", "json"}).code == cli::kSuccess);
    const auto j = nlohmann::json::parse(slurp(dir / "dimer-gate.json"));
    CHECK(j["schema"] == "dimer-gate");
    CHECK(!j["rows"].empty());
  }
  fs::remove_all(dir);
}
