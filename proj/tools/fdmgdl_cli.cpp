#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "fdmgdl/config.hpp"
#include "fdmgdl/experiment.hpp"
#include "fdmgdl/kernels.hpp"
#include "fdmgdl/presets.hpp"

using namespace fdmgdl;

namespace {

void print_summary(const RunReport& rep) {
  for (const auto& g : rep.grades) {
    std::printf("grade %d  epochs %d  loss %.6e  ac_time %.3f s", g.grade, g.epochs, g.final_loss, g.ac_time);
    if (g.tr_rse >= 0.0) std::printf("  TrRSE %.3e  TeRSE %.3e", g.tr_rse, g.te_rse);
    std::printf("\n");
  }
  for (const auto& m : rep.methods) {
    std::printf("%s  epochs %d  loss %.6e  time %.3f s", m.method.c_str(), m.epochs, m.final_loss, m.wall_seconds);
    if (m.tr_rse >= 0.0) std::printf("  TrRSE %.3e  TeRSE %.3e", m.tr_rse, m.te_rse);
    std::printf("\n");
  }
  if (rep.fdm)
    std::printf("fdm (%s)  TrRSE %.3e  TeRSE bilinear %.3e  biquadratic %.3e\n", rep.fdm->solver.c_str(),
                rep.fdm->tr_rse, rep.fdm->te_rse_bilinear, rep.fdm->te_rse_biquadratic);
  if (rep.certificate) {
    const auto& c = *rep.certificate;
    std::printf("instance %s  patterns %zu  P_c %.10e  P_nc %.10e  gap %.3e  m* %d  width %d  reconstruction %s\n",
                c.instance_hash.c_str(), c.pattern_count, c.p_c, c.p_nc, c.gap, c.m_star, c.width,
                c.reconstruction_ok ? "ok" : "failed");
  }
  if (rep.aborted) std::fprintf(stderr, "aborted: %s\n", rep.error.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* t = std::getenv("FDMGDL_THREADS")) kernels::set_thread_count(std::atoi(t));

  CLI::App app{"Finite-difference multi-grade deep learning for Helmholtz problems"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::int64_t seed = -1;
  bool deterministic = false;
  auto* run = app.add_subcommand("run", "Run one experiment from a config file");
  run->add_option("--config", config_path, "key = value config file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Override the seed");
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--deterministic", deterministic, "Bit-reproducible outputs (no timings in loss.csv)");

  std::string cert_path;
  auto* cert = app.add_subcommand("certify", "Certify the convex reformulation on a desk-scale instance");
  cert->add_option("--config", cert_path, "key = value config file")->required()->check(CLI::ExistingFile);

  auto* preset = app.add_subcommand("preset", "Preset registry");
  auto* list = preset->add_subcommand("list", "List preset names");
  preset->require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      for (const auto& p : preset_registry()) std::printf("%-28s %s\n", p.name.c_str(), p.description.c_str());
      return 0;
    }
    ExperimentConfig cfg = *run ? load_config(config_path) : load_config(cert_path, "certify");
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (deterministic) cfg.deterministic = true;
    if (cfg.deterministic) kernels::set_thread_count(1);
    const RunReport rep = run_experiment(cfg);
    write_outputs(rep, cfg.out_dir, cfg.deterministic);
    print_summary(rep);
    if (rep.certificate && !rep.certificate->lower_bound_holds) return 3;
    return rep.aborted ? 2 : 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
