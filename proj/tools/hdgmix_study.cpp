// Convergence-study driver: runs a manufactured-solution study and writes CSV and JSON tables.

#include "hdgmix/harness.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>

using namespace hdgmix;

namespace {

std::string stem(const StudyConfig& c) {
  return to_string(c.method) + "_k" + std::to_string(c.k) + "_" + c.case_name + (c.reaction ? "_reaction" : "");
}

void write_file(const std::filesystem::path& p, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write " + p.string());
  body(out);
  std::cout << "wrote " << p.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convergence studies for the RT, BDM and HDG methods"};
  std::string method = "rt", tau = "1", reaction = "off", post = "none", out_dir = ".", format = "csv,json";
  StudyConfig c;
  bool check = false;
  app.add_option("--method", method, "rt, bdm, hdg, or all to compare the three")
      ->check(CLI::IsMember({"rt", "bdm", "hdg", "all"}));
  app.add_option("--degree", c.k, "polynomial degree k")->check(CLI::NonNegativeNumber);
  app.add_option("--levels", c.levels, "number of meshes in the refinement sequence")->check(CLI::Range(2, 8));
  app.add_option("--case", c.case_name, "manufactured solution")->check(CLI::IsMember(case_names()));
  app.add_option("--tau", tau, "HDG stabilization: a positive constant or single-face");
  app.add_option("--reaction", reaction, "add the reaction term c = 1 + x")->check(CLI::IsMember({"on", "off"}));
  app.add_option("--postprocess", post, "none, stenberg, gradient or both")
      ->check(CLI::IsMember({"none", "stenberg", "gradient", "both"}));
  app.add_option("--mesh", c.mesh_file, "base mesh file; default is the criss-cross unit square")
      ->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--format", format, "csv, json or csv,json")
      ->check(CLI::IsMember({"csv", "json", "csv,json", "json,csv"}));
  app.add_flag("--check", check, "exit nonzero when an asserted rate is outside its tolerance");
  CLI11_PARSE(app, argc, argv);

  try {
    if (tau == "single-face") {
      c.single_face = true;
    } else {
      std::size_t used = 0;
      c.tau = std::stod(tau, &used);
      if (used != tau.size()) throw ConfigError("--tau expects a number or single-face");
    }
    c.reaction = reaction == "on";
    c.stenberg = post == "stenberg" || post == "both";
    c.gradient = post == "gradient" || post == "both";
    const bool csv = format.find("csv") != std::string::npos, json = format.find("json") != std::string::npos;
    std::filesystem::create_directories(out_dir);

    if (method == "all") {
      c.method = Method::HDG;
      validate(c);
      const auto rows = compare_methods(c, {Method::RT, Method::BDM, Method::HDG});
      write_file(std::filesystem::path(out_dir) / ("compare_k" + std::to_string(c.k) + "_" + c.case_name + ".csv"),
                 [&](std::ostream& o) { write_comparison(o, rows); });
      write_comparison(std::cout, rows);
      return 0;
    }

    c.method = method_from_string(method);
    validate(c);
    const ConvergenceReport rep = run_study(c);
    const std::filesystem::path base = std::filesystem::path(out_dir) / stem(c);
    if (csv) write_file(base.string() + ".csv", [&](std::ostream& o) { write_csv(o, rep); });
    if (json) write_file(base.string() + ".json", [&](std::ostream& o) { o << to_json(rep).dump(2) << '\n'; });
    write_summary(std::cout, rep);
    return check && !rep.passed() ? 1 : 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument&) {
    std::cerr << "error: --tau expects a number or single-face\n";
    return 2;
  }
}
