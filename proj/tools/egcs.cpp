// Command-line front end: train, eval, compare, gen-traffic, calibrate-gamma.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "egcs/harness.hpp"

namespace fs = std::filesystem;
using namespace egcs;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string agent;
  std::optional<int> max_subset;
  std::string discount;
  std::optional<double> scale;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--agent", f.agent, "etd|random|first|closest|sector|least_busy|rl_combinatorial|rl_branching");
  cmd->add_option("--max-subset", f.max_subset, "largest elevator subset (combinatorial head)")->check(CLI::Range(1, 3));
  cmd->add_option("--discount", f.discount, "fixed|variable")->check(CLI::IsMember({"fixed", "variable"}));
  cmd->add_option("--scale", f.scale, "traffic multiplier")->check(CLI::IsMember({1.0, 1.5, 2.0}));
  cmd->add_option("--out", f.out, "output directory");
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (f.seed) c.master_seed = *f.seed;
  if (!f.agent.empty()) c.agent = parse_agent(f.agent);
  if (f.max_subset) c.max_subset = *f.max_subset;
  if (!f.discount.empty()) c.discount.scheme = parse_discount(f.discount);
  if (f.scale) c.scale = *f.scale;
  if (!f.out.empty()) c.output_dir = f.out;
  return c;
}

void print_report(const MetricsReport& r) {
  std::printf("%-18s scale=%.1f runs=%zu\n", r.agent.c_str(), r.scale, r.runs.size());
  for (const auto& m : metric_names()) {
    const auto s = r.stat(m);
    std::printf("  %-24s %14.3f +- %.3f\n", m.c_str(), s.mean, s.sd);
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);)
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elevator group control: simulator, dispatchers and DDQN agents"};
  app.require_subcommand(1);

  CommonFlags train_f;
  long train_steps = 0;
  auto* train_cmd = app.add_subcommand("train", "train an RL agent and keep the best validation checkpoint");
  add_common(train_cmd, train_f);
  train_cmd->add_option("--steps", train_steps, "override training steps");

  CommonFlags eval_f;
  std::string eval_ckpt;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a dispatcher or checkpoint on the test episodes");
  add_common(eval_cmd, eval_f);
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint for RL agents");
  bool eval_events = false;
  eval_cmd->add_flag("--events", eval_events, "write events.jsonl for the first episode");

  CommonFlags cmp_f;
  std::string cmp_agents = "etd,least_busy,random";
  std::string cmp_scales = "1.0,1.5,2.0";
  std::vector<std::string> cmp_ckpts;
  auto* cmp_cmd = app.add_subcommand("compare", "evaluate several agents across traffic scales");
  add_common(cmp_cmd, cmp_f);
  cmp_cmd->add_option("--agents", cmp_agents, "comma-separated agent kinds");
  cmp_cmd->add_option("--scales", cmp_scales, "comma-separated traffic multipliers");
  cmp_cmd->add_option("--checkpoint", cmp_ckpts, "kind=path for each RL agent listed (repeatable)");

  CommonFlags gen_f;
  int gen_days = 1;
  std::string gen_profile_out;
  auto* gen_cmd = app.add_subcommand("gen-traffic", "write day traces for the configured profile");
  add_common(gen_cmd, gen_f);
  gen_cmd->add_option("--days", gen_days, "number of day traces")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--profile-out", gen_profile_out, "also dump the effective profile as JSON");

  CommonFlags cal_f;
  double cal_gamma = 0.95;
  std::optional<double> cal_avg_n;
  auto* cal_cmd = app.add_subcommand("calibrate-gamma", "per-infra-step discount matching a per-decision discount");
  add_common(cal_cmd, cal_f);
  cal_cmd->add_option("--gamma", cal_gamma, "per-decision discount")->check(CLI::Range(0.0, 1.0));
  cal_cmd->add_option("--avg-n", cal_avg_n, "mean infra-steps per decision (measured on the train days if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      RunConfig c = resolve(train_f);
      if (train_steps > 0) c.training_steps = train_steps;
      if (c.output_dir.empty()) c.output_dir = "runs/train";
      fs::create_directories(c.output_dir);
      std::ofstream(fs::path(c.output_dir) / "config.json") << to_json(c).dump(2) << '\n';
      const auto r = train(c, &std::cout);
      std::printf("best validation reward %.3f at step %ld (%.1f s)\n", r.best_reward, r.best_step, r.seconds);
      std::printf("checkpoint: %s\n", (fs::path(c.output_dir) / "best.ckpt.json").string().c_str());
    } else if (*eval_cmd) {
      RunConfig c = resolve(eval_f);
      if (!eval_ckpt.empty()) c.checkpoint = eval_ckpt;
      c.events = c.events || eval_events;
      if (c.output_dir.empty()) c.output_dir = "runs/eval";
      print_report(evaluate(c));
    } else if (*cmp_cmd) {
      RunConfig c = resolve(cmp_f);
      if (c.output_dir.empty()) c.output_dir = "runs/compare";
      std::map<std::string, std::string> ckpt_paths;
      for (const auto& kv : cmp_ckpts) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--checkpoint expects label=path");
        ckpt_paths[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      std::vector<CompareEntry> entries;
      for (const auto& name : split(cmp_agents, ',')) {
        CompareEntry e;
        e.label = name;
        e.kind = parse_agent(name);
        if (is_rl(e.kind)) {
          auto it = ckpt_paths.find(name);
          if (it == ckpt_paths.end()) throw std::invalid_argument("no --checkpoint given for " + name);
          e.checkpoint = load_checkpoint(it->second);
        }
        entries.push_back(std::move(e));
      }
      std::vector<double> scales;
      for (const auto& s : split(cmp_scales, ',')) scales.push_back(std::stod(s));
      for (const auto& r : compare(c, entries, scales)) print_report(r);
      std::printf("wrote %s\n", (fs::path(c.output_dir) / "metrics.csv").string().c_str());
    } else if (*gen_cmd) {
      RunConfig c = resolve(gen_f);
      if (c.output_dir.empty()) c.output_dir = "runs/traffic";
      fs::create_directories(c.output_dir);
      const auto profile = c.profile();
      if (!gen_profile_out.empty()) save_profile(profile, gen_profile_out);
      const auto traces = episode_traces(profile, derive_seed(c.master_seed, 0x747261), gen_days);
      for (std::size_t i = 0; i < traces.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "trace_%03zu.jsonl", i);
        save_trace(traces[i], (fs::path(c.output_dir) / name).string());
        std::printf("%s day=%d groups=%zu passengers=%zu\n", name, traces[i].meta.day_of_week,
                    traces[i].groups.size(), traces[i].passenger_count());
      }
    } else if (*cal_cmd) {
      RunConfig c = resolve(cal_f);
      double avg_n = 0.0;
      if (cal_avg_n) {
        avg_n = *cal_avg_n;
      } else {
        const auto days = episode_traces(c.profile(), c.seeds.train, c.train_days);
        const auto env = measure_env(c.building, days, 2, derive_seed(c.master_seed, 0x6e6f726d));
        avg_n = env.avg_n;
        std::printf("measured avg infra-steps per decision: %.4f over %.0f decisions\n", avg_n, env.decisions_per_pass);
      }
      const double g = calibrate_gamma_infra(cal_gamma, avg_n);
      std::printf("gamma_infra = %.17g  (gamma_infra^%.4f = %.17g)\n", g, avg_n, std::pow(g, avg_n));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
