// Command-line front end: one subcommand per study kind.
//
//   fracdg convergence --config configs/convergence_k1.ini --out runs/k1
//   FRACDG_CACHE_DIR=~/.cache/fracdg fracdg operator-check --lambda 0.3
//
// Exit status: 0 when every requested check passes and nothing blew up,
// 1 on a failed check or blow-up, 2 on configuration errors, 3 otherwise.

#include "fracdg/fracdg.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

namespace {

std::string sha256_file(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  const std::string data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

void write_manifest(const fracdg::RunConfig& cfg, const fracdg::StudyResult& res) {
  const std::filesystem::path out(cfg.out);
  fracdg::Json files = fracdg::Json::array();
  for (const auto& f : res.files) {
    files.push_back(fracdg::Json{{"path", f.generic_string()},
                                 {"bytes", std::filesystem::file_size(out / f)},
                                 {"sha256", sha256_file(out / f)}});
  }
  const fracdg::Json manifest{{"study", cfg.kind}, {"pass", res.pass}, {"files", files}};
  std::ofstream os(out / "manifest.json", std::ios::binary | std::ios::trunc);
  os << manifest.dump(2) << '\n';
}

struct Flags {
  std::string config;
  std::map<std::string, std::string> overrides;
  std::vector<std::string> sets;
};

void add_common_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "configuration file (flat key = value sections)");
  // each flag maps to the config key of the same meaning
  const std::vector<std::pair<std::string, std::string>> keyed = {
      {"--flux", "flux"}, {"--lambda", "lambda"}, {"--k", "k"},     {"--grids", "grids"},
      {"--cfl", "cfl"},   {"--T", "T"},           {"--out", "out"}, {"--seed", "seed"},
      {"--N", "N"}};
  for (const auto& [flag, key] : keyed) {
    sub->add_option_function<std::string>(flag, [&f, key = key](const std::string& v) { f.overrides[key] = v; },
                                          "override '" + key + "'");
  }
  sub->add_option("--set", f.sets, "override any key: --set key=value (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discontinuous Galerkin solver for fractional convection-diffusion on the torus"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::string> kinds = {"solve", "convergence", "temporal-order", "operator-check", "diagnostics"};
  for (const auto& k : kinds) add_common_flags(app.add_subcommand(k, "run the " + k + " study"), flags);
  CLI11_PARSE(app, argc, argv);

  const std::string kind = app.get_subcommands().front()->get_name();
  try {
    for (const auto& s : flags.sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw fracdg::ConfigError(s, "--set expects key=value");
      flags.overrides[s.substr(0, eq)] = s.substr(eq + 1);
    }
    flags.overrides["kind"] = kind;
    const fracdg::RunConfig cfg = flags.config.empty() ? fracdg::parse_config_text("", flags.overrides)
                                                       : fracdg::parse_config(flags.config, flags.overrides);
    const fracdg::StudyResult res = fracdg::run_study(cfg);
    write_manifest(cfg, res);
    std::cout << kind << ": " << (res.pass ? "PASS" : "FAIL") << " (outputs in " << cfg.out << ")\n";
    return res.pass ? 0 : 1;
  } catch (const fracdg::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
