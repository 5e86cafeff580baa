// ramseylab <subcommand> --scenario FILE [--out FILE] [--threads N]
//
// Exit codes: 0 success, 1 scenario or validation error, 2 I/O error,
// 3 numerical failure.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ramseylab/scenario.hpp"
#include "ramseylab/version.hpp"

namespace {

enum Exit { kOk = 0, kScenario = 1, kIo = 2, kNumerical = 3 };

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ramseylab::IoError("cannot open scenario file " + path);
  std::ostringstream s;
  s << in.rdbuf();
  if (in.bad()) throw ramseylab::IoError("cannot read scenario file " + path);
  return s.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    if (!std::cout) throw ramseylab::IoError("cannot write to standard output");
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ramseylab::IoError("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw ramseylab::IoError("cannot write " + path);
}

int run_command(const std::string& subcommand, const std::string& scenario_path, const std::string& out_path,
                unsigned threads) {
  using namespace ramseylab;
  try {
    const Scenario sc = parse_scenario(read_file(scenario_path));
    if (subcommand != "run" && subcommand != to_string(sc.kind)) {
      throw ScenarioError("scenario:" + std::to_string(sc.kind_line) + ": kind " + to_string(sc.kind) +
                          " does not match subcommand " + subcommand);
    }
    write_output(out_path, to_csv(run(sc, threads)));
    return kOk;
  } catch (const IoError& e) {
    std::cerr << "ramseylab: " << e.what() << "\n";
    return kIo;
  } catch (const NumericalError& e) {
    std::cerr << "ramseylab: numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const Error& e) {
    std::cerr << scenario_path << ": " << e.what() << "\n";
    return kScenario;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ramsey interferometry with quantized cavity fields"};
  app.set_version_flag("--version", std::string(ramseylab::kVersion));
  app.require_subcommand(1);

  std::string scenario_path, out_path;
  unsigned threads = 1;
  auto add = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--scenario", scenario_path, "Scenario file")->required();
    sub->add_option("--out", out_path, "Output CSV (standard output if omitted)");
    sub->add_option("--threads", threads, "Worker threads for scans")->check(CLI::Range(1u, 256u));
  };
  add("run", "Run any scenario, dispatching on its kind");
  add("fringe-scan", "Single-atom Ramsey fringe scan");
  add("two-atom", "Joint detection probability of two atoms versus phase");
  add("prepare-20-02", "Post-selected (|2,0> - e^{i theta}|0,2>)/sqrt2 preparation");
  add("prepare-303", "Three-photon extension of prepare-20-02");
  add("transfer", "Move field entanglement onto an atom pair");
  add("decay", "Cavity decay of the single-photon entangled field");
  add("dispersive-cat", "Entangled coherent state from a far-detuned atom");
  add("beamsplitter", "Two-mode Fock state through a beam splitter");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kScenario;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  return run_command(name, scenario_path, out_path, threads);
}
