#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kklab/catalog.hpp"
#include "kklab/scenario.hpp"

namespace {

int list_catalog(bool check) {
  int status = 0;
  for (const auto& e : kklab::catalog()) {
    std::cout << e.signature << (e.is_bundle ? "  [bundle]" : "  [metric]") << "\n    " << e.description << "\n";
    if (!e.reference.empty()) std::cout << "    reference: " << e.reference << "\n";
    if (!check) continue;
    try {
      const kklab::CatalogCheck c = kklab::self_validate(kklab::resolve_geometry(e.name));
      std::cout << "    check: " << (c.ok ? "ok" : "FAILED") << "\n";
      for (const auto& f : c.failures) std::cout << "      " << f << "\n";
      if (!c.ok) status = 3;
    } catch (const kklab::Error& err) {
      std::cout << "    check: FAILED (" << err.what() << ")\n";
      status = 3;
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kaluza-Klein reduction lab: curvature decomposition, reduced Hamiltonians, Monte Carlo kernel checks"};
  app.require_subcommand(1);

  std::string config, out_dir = ".", format = "json";
  for (const auto& name : kklab::scenario_commands()) {
    auto* sub = app.add_subcommand(name, "run a '" + name + "' scenario");
    sub->add_option("--config", config, "JSON scenario file")->required();
    sub->add_option("--out", out_dir, "report directory");
    sub->add_option("--format", format, "report format")->check(CLI::IsMember({"json", "csv"}));
  }
  bool check = false;
  auto* cat = app.add_subcommand("catalog", "list named geometries");
  cat->add_flag("--check", check, "self-validate every entry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (cat->parsed()) return list_catalog(check);
  const std::string command = app.get_subcommands().front()->get_name();
  const auto f = format == "csv" ? kklab::ReportFormat::Csv : kklab::ReportFormat::Json;
  return kklab::run_scenario_file(command, config, out_dir, f, std::cerr);
}
