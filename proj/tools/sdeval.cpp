// sdeval: command-line entry point for the evaluation harness.

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sdeval/board/server.hpp"
#include "sdeval/cli/exit_codes.hpp"
#include "sdeval/sdeval.hpp"
#include "sdeval/testing/toy_corpus.hpp"

#ifndef SDEVAL_SHARE_DIR
#define SDEVAL_SHARE_DIR "share"
#endif

namespace fs = std::filesystem;
using namespace sdeval;
using json = nlohmann::json;

namespace {

constexpr const char* kSaltEnv = "SDEVAL_ANON_SALT";

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cerr << "seed: " << s << " (generated; pass --seed " << s << " to reproduce)\n";
  return s;
}

std::vector<augment::AugmentationSpec> plan_from_arg(const std::string& arg) {
  if (arg.empty() || arg == "default") return augment::default_task2_plan();
  std::ifstream in(arg);
  if (!in) fail(ErrorCode::kIo, "cannot read plan " + arg, {arg});
  try {
    return augment::load_plan(json::parse(in));
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, "plan " + arg + ": " + e.what());
  }
}

std::vector<launder::LaunderSpec> techniques_from_arg(const std::string& arg) {
  auto all = launder::default_task3_techniques();
  if (arg.empty() || arg == "default") return all;
  if (fs::is_regular_file(arg)) {
    std::ifstream in(arg);
    try {
      return json::parse(in).get<std::vector<launder::LaunderSpec>>();
    } catch (const json::exception& e) {
      fail(ErrorCode::kFormat, "techniques " + arg + ": " + e.what());
    }
  }
  std::vector<launder::LaunderSpec> out;
  std::stringstream ss(arg);
  for (std::string name; std::getline(ss, name, ',');) {
    launder::LaunderSpec s;
    s.technique = launder::parse_technique(name);
    out.push_back(s);
  }
  return out;
}

void write_json_file(const fs::path& p, const json& j) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::kIo, "cannot write " + p.string(), {p.string()});
}

fs::path provenance_path(const fs::path& audio_root, const std::string& file_path) {
  fs::path p = audio_root / file_path;
  p.replace_extension(".prov.json");
  return p;
}

void save_with_public(const fs::path& out, const std::string& public_out, const manifest::Manifest& m) {
  manifest::save_manifest(out, m);
  if (!public_out.empty()) manifest::save_manifest(public_out, manifest::project_public(m));
}

// Runs fn(i) for i in [0, n) on `jobs` threads; the first failure is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < std::max(1u, jobs); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

std::size_t per_source_count(const manifest::Manifest& m) {
  std::size_t best = 0;
  for (const auto& [src, n] : m.counts_by_source()) {
    const auto* s = m.find_source(src);
    if (s && s->kind == manifest::Label::kGenerated) best = std::max(best, n);
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sdeval: synthetic-speech detection evaluation harness"};
  app.set_config("--config", "", "TOML or INI file with option defaults; flags given on the command line win");
  app.require_subcommand(1);
  app.footer(cli::exit_code_table() + "\nEnvironment:\n  " + board::kOperatorTokenEnv +
             "  operator bearer token for serve/publish\n  " + kSaltEnv + "  anonymization salt for score\n");

  std::optional<std::uint64_t> seed;
  std::function<int()> action;

  // manifest -----------------------------------------------------------------
  auto* man = app.add_subcommand("manifest", "Build, derive and validate dataset manifests");
  man->require_subcommand(1);

  auto* build = man->add_subcommand("build", "Select Task 1 originals from per-source directories");
  std::string real_root, gen_root, catalog, audio_root_opt, out, public_out;
  std::size_t per_source = 200;
  std::optional<std::size_t> public_real, public_generated;
  build->add_option("--real", real_root, "Directory of real sources (one subdirectory per source)")->required();
  build->add_option("--generated", gen_root, "Directory of generated sources")->required();
  build->add_option("--per-source", per_source, "Clips selected per source")->capture_default_str();
  build->add_option("--catalog", catalog, "Source catalog JSON (display names, public flags)");
  build->add_option("--audio-root", audio_root_opt, "Root that manifest paths are relative to");
  build->add_option("--public-real", public_real, "Real sources in the public split");
  build->add_option("--public-generated", public_generated, "Generated sources in the public split");
  build->add_option("--out", out, "Private manifest to write")->required();
  build->add_option("--public-out", public_out, "Public manifest to write");
  build->add_option("--seed", seed, "Selection seed");
  build->callback([&] {
    action = [&] {
      manifest::Task1Options opt;
      if (!audio_root_opt.empty()) opt.audio_root = audio_root_opt;
      if (!catalog.empty()) opt.catalog = manifest::SourceCatalog::load(catalog);
      opt.public_real = public_real;
      opt.public_generated = public_generated;
      const auto m = manifest::build_task1_manifest(real_root, gen_root, per_source, resolve_seed(seed), opt);
      save_with_public(out, public_out, m);
      std::size_t nr = 0, ng = 0, pr = 0, pg = 0;
      for (const auto& s : m.sources) {
        (s.kind == manifest::Label::kReal ? nr : ng)++;
        if (s.in_public_split) (s.kind == manifest::Label::kReal ? pr : pg)++;
      }
      std::cout << "task1: " << m.sources.size() << " sources (" << nr << " real, " << ng << " generated), "
                << m.samples.size() << " samples, " << per_source << " per source\n"
                << "public split: " << pr << " of " << nr << " real, " << pg << " of " << ng
                << " generated sources\n"
                << "wrote " << out << (public_out.empty() ? "" : " and " + public_out) << '\n';
      return cli::kExitOk;
    };
  });

  auto* derive = man->add_subcommand("derive", "Derive the Task 2 or Task 3 manifest from Task 1");
  std::string derive_task, from, plan_arg = "default", techniques_arg = "default";
  std::size_t clips = 20, per_technique = 50;
  derive->add_option("--task", derive_task, "2 or 3")->required();
  derive->add_option("--from", from, "Task 1 private manifest")->required();
  derive->add_option("--clips", clips, "Task 2: clips per generated source")->capture_default_str();
  derive->add_option("--plan", plan_arg, "Task 2: 'default' (18 operators) or a plan JSON file")->capture_default_str();
  derive->add_option("--per-technique", per_technique, "Task 3: clips per technique and source")->capture_default_str();
  derive->add_option("--techniques", techniques_arg, "Task 3: 'default', comma list, or JSON file")->capture_default_str();
  derive->add_option("--out", out, "Private manifest to write")->required();
  derive->add_option("--public-out", public_out, "Public manifest to write");
  derive->add_option("--seed", seed, "Selection seed");
  derive->callback([&] {
    action = [&] {
      const auto t1 = manifest::load_manifest(from);
      const auto task = manifest::parse_task(derive_task);
      manifest::Manifest m;
      if (task == manifest::Task::kTask2) {
        const auto plan = plan_from_arg(plan_arg);
        m = manifest::derive_task2_manifest(t1, plan, clips, resolve_seed(seed));
        save_with_public(out, public_out, m);
        std::cout << "task2: per generated source " << per_source_count(m) << " samples = " << clips
                  << " clips x " << plan.size() + 1 << " (original + " << plan.size() << " variants)\n";
      } else if (task == manifest::Task::kTask3) {
        const auto techniques = techniques_from_arg(techniques_arg);
        m = manifest::derive_task3_manifest(t1, techniques, per_technique, resolve_seed(seed));
        save_with_public(out, public_out, m);
        std::cout << "task3: per generated source " << per_source_count(m) << " samples = " << per_technique
                  << " x " << techniques.size() << " techniques\n";
      } else {
        fail(ErrorCode::kInvalidArgument, "derive takes --task 2 or 3");
      }
      std::cout << "wrote " << out << " (" << m.samples.size() << " samples)"
                << (public_out.empty() ? "" : " and " + public_out) << '\n';
      return cli::kExitOk;
    };
  });

  auto* validate = man->add_subcommand("validate", "Check balance, lineage, labels and the public subset");
  std::string manifest_path, public_manifest, parent_manifest;
  validate->add_option("manifest", manifest_path, "Manifest to check")->required();
  validate->add_option("--public", public_manifest, "Public manifest that must be a subset");
  validate->add_option("--parent", parent_manifest, "Task 1 manifest holding Task 3 parents");
  validate->callback([&] {
    action = [&] {
      const auto m = manifest::load_manifest(manifest_path);
      std::optional<manifest::Manifest> pub, parent;
      manifest::ValidationContext ctx;
      if (!public_manifest.empty()) ctx.public_manifest = &pub.emplace(manifest::load_manifest(public_manifest));
      if (!parent_manifest.empty()) ctx.parent_manifest = &parent.emplace(manifest::load_manifest(parent_manifest));
      const auto report = manifest::validate_manifest(m, ctx);
      for (const auto& v : report.violations) {
        std::cout << json{{"rule", v.rule}, {"subject", v.subject}, {"message", v.message}}.dump() << '\n';
      }
      std::cerr << manifest_path << ": " << m.samples.size() << " samples, "
                << (report.ok() ? "ok" : std::to_string(report.violations.size()) + " violations") << '\n';
      return report.ok() ? cli::kExitOk : cli::kExitViolations;
    };
  });

  // augment ------------------------------------------------------------------
  auto* aug = app.add_subcommand("augment", "Render Task 2 variants");
  aug->require_subcommand(1);
  auto* aug_apply = aug->add_subcommand("apply", "Apply the plan to every variant record of a Task 2 manifest");
  std::string audio_root, plugins = std::string(SDEVAL_SHARE_DIR) + "/plugins.json", workdir;
  unsigned jobs = 1;
  aug_apply->add_option("--manifest", manifest_path, "Task 2 private manifest")->required();
  aug_apply->add_option("--audio-root", audio_root, "Root of manifest file paths")->required();
  aug_apply->add_option("--plan", plan_arg, "'default' or the plan JSON used to derive the manifest")->capture_default_str();
  aug_apply->add_option("--plugins", plugins, "Transcoder plugin registry")->capture_default_str();
  aug_apply->add_option("--jobs", jobs, "Parallel workers")->capture_default_str();
  aug_apply->add_option("--workdir", workdir, "Scratch directory (default <audio-root>/.work)");
  aug_apply->add_option("--out", out, "Updated manifest (default: overwrite --manifest)");
  aug_apply->add_option("--public-out", public_out, "Public projection of the updated manifest");
  aug_apply->callback([&] {
    action = [&] {
      auto m = manifest::load_manifest(manifest_path);
      if (m.task != manifest::Task::kTask2) fail(ErrorCode::kInvalidArgument, "augment apply needs a Task 2 manifest");
      const auto plan = plan_from_arg(plan_arg);
      std::map<std::string, const augment::AugmentationSpec*> by_name;
      bool needs_plugins = false;
      for (const auto& s : plan) {
        by_name[s.name] = &s;
        needs_plugins |= s.op == augment::AugmentOp::kCodecChain || s.op == augment::AugmentOp::kNeuralCodec;
      }
      std::optional<augment::PluginRegistry> registry;
      if (needs_plugins) registry = augment::PluginRegistry::load(plugins);
      const fs::path work = workdir.empty() ? fs::path(audio_root) / ".work" : fs::path(workdir);
      std::vector<std::size_t> todo;
      for (std::size_t i = 0; i < m.samples.size(); ++i) {
        const auto& s = m.samples[i];
        if (s.is_original()) continue;
        if (!by_name.count(s.variant)) {
          fail(ErrorCode::kUnknownOperator, "variant '" + s.variant + "' is not in the plan", {s.variant});
        }
        todo.push_back(i);
      }
      std::mutex mu;
      parallel_for(todo.size(), jobs, [&](std::size_t k) {
        auto& rec = m.samples[todo[k]];
        const auto* parent = m.find_sample(*rec.parent_sample_id);
        const auto input = audio::read_wav(fs::path(audio_root) / parent->file_path);
        augment::AugmentContext ctx{registry ? &*registry : nullptr, work / rec.sample_id};
        const auto seed_i = util::derive_seed(m.seed, rec.sample_id);
        const auto r = augment::apply_augmentation(*by_name.at(rec.variant), input, seed_i, ctx);
        audio::write_wav(fs::path(audio_root) / rec.file_path, r.audio);
        write_json_file(provenance_path(audio_root, rec.file_path),
                        json{{"sample_id", rec.sample_id}, {"parent_sample_id", *rec.parent_sample_id},
                             {"provenance", r.provenance}});
        std::lock_guard lock(mu);
        rec.duration_s = r.audio.duration_s();
        rec.sample_rate_hz = r.audio.sample_rate_hz();
      });
      std::error_code ec;
      fs::remove_all(work, ec);
      save_with_public(out.empty() ? manifest_path : out, public_out, m);
      std::cout << "augmented " << todo.size() << " variant clips with " << plan.size() << " operators\n";
      return cli::kExitOk;
    };
  });

  // launder ------------------------------------------------------------------
  auto* lau = app.add_subcommand("launder", "Render Task 3 laundered clips and ingest over-air recordings");
  lau->require_subcommand(1);
  auto* lau_apply = lau->add_subcommand("apply", "Apply laundering to every planned Task 3 record");
  std::string noise_bank, ir_dir, export_dir, noise_id, ir_id;
  bool surrogate = false;
  double snr_min = 5.0, snr_max = 20.0;
  lau_apply->add_option("--manifest", manifest_path, "Task 3 private manifest")->required();
  lau_apply->add_option("--parent", parent_manifest, "Task 1 manifest with the parent clips")->required();
  lau_apply->add_option("--audio-root", audio_root, "Root of manifest file paths")->required();
  lau_apply->add_option("--noise-bank", noise_bank, "Directory of background-noise WAVs");
  lau_apply->add_option("--ir-dir", ir_dir, "Directory of impulse-response WAVs (bundled set otherwise)");
  lau_apply->add_option("--noise-id", noise_id, "Fixed noise clip (default: seeded pick)");
  lau_apply->add_option("--ir-id", ir_id, "Fixed impulse response (default: seeded pick)");
  lau_apply->add_option("--snr-min", snr_min, "Car-noise SNR lower bound, dB")->capture_default_str();
  lau_apply->add_option("--snr-max", snr_max, "Car-noise SNR upper bound, dB")->capture_default_str();
  lau_apply->add_flag("--surrogate", surrogate, "Replace the physical over-air pass with the tagged surrogate");
  lau_apply->add_option("--export-dir", export_dir, "Playback exports (default <audio-root>/export/task3)");
  lau_apply->add_option("--jobs", jobs, "Parallel workers")->capture_default_str();
  lau_apply->add_option("--out", out, "Updated manifest (default: overwrite --manifest)");
  lau_apply->add_option("--public-out", public_out, "Public projection of the updated manifest");
  lau_apply->callback([&] {
    action = [&] {
      auto m = manifest::load_manifest(manifest_path);
      if (m.task != manifest::Task::kTask3) fail(ErrorCode::kInvalidArgument, "launder apply needs a Task 3 manifest");
      const auto t1 = manifest::load_manifest(parent_manifest);
      std::optional<launder::NoiseBank> bank;
      std::vector<std::size_t> todo;
      bool want_noise = false;
      for (std::size_t i = 0; i < m.samples.size(); ++i) {
        const auto& s = m.samples[i];
        if (s.is_original() || s.label != manifest::Label::kGenerated) continue;
        want_noise |= launder::needs_noise(launder::parse_technique(s.variant));
        todo.push_back(i);
      }
      if (want_noise) bank.emplace(noise_bank.empty() ? fs::path(audio_root) / "noise" : fs::path(noise_bank));
      const launder::IrBank irs(ir_dir);
      const launder::LaunderContext ctx{bank ? &*bank : nullptr, &irs};
      const fs::path exports = export_dir.empty() ? fs::path(audio_root) / "export" / "task3" : fs::path(export_dir);
      std::mutex mu;
      std::vector<std::string> playlist;
      parallel_for(todo.size(), jobs, [&](std::size_t k) {
        auto& rec = m.samples[todo[k]];
        const auto* parent = t1.find_sample(*rec.parent_sample_id);
        if (!parent) fail(ErrorCode::kUnknownParent, "parent not in --parent manifest", {*rec.parent_sample_id});
        launder::LaunderSpec spec;
        spec.technique = launder::parse_technique(rec.variant);
        spec.noise_id = noise_id;
        spec.ir_id = ir_id;
        spec.snr_db_min = snr_min;
        spec.snr_db_max = snr_max;
        spec.over_air_surrogate = surrogate;
        const auto input = audio::read_wav(fs::path(audio_root) / parent->file_path);
        const auto r = launder::apply_launder(spec, input, util::derive_seed(m.seed, rec.sample_id), ctx);
        const json prov{{"sample_id", rec.sample_id}, {"parent_sample_id", *rec.parent_sample_id},
                        {"provenance", r.provenance}};
        if (r.awaiting_ingest) {
          const fs::path exp = exports / (rec.sample_id + ".wav");
          audio::write_wav(exp, *r.audio);
          write_json_file(fs::path(exp).replace_extension(".prov.json"), prov);
          std::lock_guard lock(mu);
          playlist.push_back(*rec.parent_sample_id + "\t" + rec.variant + "\t" + exp.string());
          return;
        }
        audio::write_wav(fs::path(audio_root) / rec.file_path, *r.audio);
        write_json_file(provenance_path(audio_root, rec.file_path), prov);
        std::lock_guard lock(mu);
        rec.duration_s = r.audio->duration_s();
        rec.sample_rate_hz = r.audio->sample_rate_hz();
      });
      if (!playlist.empty()) {
        std::sort(playlist.begin(), playlist.end());
        fs::create_directories(exports);
        std::ofstream pl(exports / "playlist.tsv");
        pl << "parent_sample_id\ttechnique\texport_path\n";
        for (const auto& l : playlist) pl << l << '\n';
      }
      save_with_public(out.empty() ? manifest_path : out, public_out, m);
      std::cout << "laundered " << todo.size() - playlist.size() << " clips";
      if (!playlist.empty()) {
        std::cout << "; " << playlist.size() << " exported for over-air recording (" << (exports / "playlist.tsv").string()
                  << ")";
      }
      std::cout << '\n';
      return cli::kExitOk;
    };
  });

  auto* lau_ingest = lau->add_subcommand("ingest", "Attach physical over-air recordings to their parents");
  std::string recordings;
  lau_ingest->add_option("--manifest", manifest_path, "Task 3 private manifest")->required();
  lau_ingest->add_option("--audio-root", audio_root, "Root of manifest file paths")->required();
  lau_ingest->add_option("--recordings", recordings, "Recording manifest (TSV)")->required();
  lau_ingest->add_option("--out", out, "Updated manifest (default: overwrite --manifest)");
  lau_ingest->add_option("--public-out", public_out, "Public projection of the updated manifest");
  lau_ingest->callback([&] {
    action = [&] {
      auto m = manifest::load_manifest(manifest_path);
      std::size_t n = 0;
      for (const auto& e : launder::read_recording_manifest(recordings)) {
        launder::LaunderSpec spec;
        spec.technique = launder::parse_technique(e.technique);
        const auto r = launder::apply_launder(spec, launder::OverAirIngest{e.parent_sample_id, e.recorded_path, &m},
                                              m.seed, {});
        audio::copy_wav_audio_only(e.recorded_path, fs::path(audio_root) / r.record->file_path);
        write_json_file(provenance_path(audio_root, r.record->file_path),
                        json{{"sample_id", r.record->sample_id}, {"parent_sample_id", e.parent_sample_id},
                             {"provenance", r.provenance}});
        manifest::upsert_sample(m, *r.record);
        ++n;
      }
      save_with_public(out.empty() ? manifest_path : out, public_out, m);
      std::cout << "ingested " << n << " over-air recordings\n";
      return cli::kExitOk;
    };
  });

  // run ----------------------------------------------------------------------
  auto* run = app.add_subcommand("run", "Execute detectors under the blind protocol");
  run->require_subcommand(1);
  auto* submit = run->add_subcommand("submit", "Stage the dataset, run one detector and capture its submission");
  std::string team, task_name = "task1", runs_dir, compute_profile;
  runner::RunConfig cfg;
  bool allow_network = false;
  std::optional<std::int64_t> submitted_at;
  std::vector<std::string> entry;
  submit->add_option("--team", team, "Team id")->required();
  submit->add_option("--task", task_name, "Task label recorded with the run")->capture_default_str();
  submit->add_option("--manifest", manifest_path, "Manifest whose samples are staged")->required();
  submit->add_option("--audio-root", audio_root, "Root of manifest file paths")->required();
  submit->add_option("--runs-dir", runs_dir, "Run logs, quota ledger and per-job directories")->required();
  submit->add_option("--budget", cfg.time_budget_s, "Wall-clock budget, seconds")->capture_default_str();
  submit->add_option("--quota", cfg.quota_per_day, "Accepted submissions per team per UTC day")->capture_default_str();
  submit->add_option("--workdir-quota", cfg.sandbox.workdir_quota_bytes, "Largest file the detector may write, bytes")
      ->capture_default_str();
  submit->add_option("--compute-profile", cfg.compute_profile, "Free-text hardware descriptor recorded with the run");
  submit->add_flag("--allow-network", allow_network, "Do not sequester the detector from the network");
  submit->add_option("--submitted-at", submitted_at, "Submission time, epoch seconds (default: now)");
  submit->add_option("command", entry, "Detector command; dataset dir and output path are appended")
      ->required();
  submit->callback([&] {
    action = [&] {
      runner::SubmissionJob job;
      job.team_id = team;
      job.task = task_name;
      job.entry_command = entry;
      job.manifest_path = manifest_path;
      job.audio_root = audio_root;
      job.submitted_at = submitted_at.value_or(runner::now_epoch_s());
      cfg.sandbox.deny_network = !allow_network;
      const auto r = runner::submit(job, cfg, runs_dir);
      std::cout << json(r).dump() << '\n';
      std::cerr << "run " << r.job_id << ": " << runner::to_string(r.status) << " in " << r.wall_time_s << " s";
      if (!r.network_attempts.empty()) std::cerr << ", " << r.network_attempts.size() << " network attempts blocked";
      std::cerr << '\n';
      return cli::exit_code_for(r.status);
    };
  });

  // score --------------------------------------------------------------------
  auto* score = app.add_subcommand("score", "Validate a submission and compute the metric reports");
  std::string submission, salt, report_out, public_report_out;
  bool no_roc = false;
  score->add_option("--manifest", manifest_path, "Private manifest")->required();
  score->add_option("--submission", submission, "Submission CSV")->required();
  score->add_option("--public-manifest", public_manifest, "Public manifest; adds the anonymized public report");
  score->add_option("--salt", salt, std::string("Anonymization salt (default $") + kSaltEnv + ")");
  score->add_option("--out", report_out, "Private report path (default: stdout)");
  score->add_option("--public-out", public_report_out, "Public report path");
  score->add_flag("--no-roc", no_roc, "Leave score-based curves out of the reports");
  score->callback([&] {
    action = [&] {
      const auto m = manifest::load_manifest(manifest_path);
      const auto sub = scoring::parse_submission(submission, m);
      for (const auto& c : sub.canonicalized) std::cerr << "note: " << c << '\n';
      const auto rep = scoring::full_report(sub.records, m, {nullptr, !no_roc});
      if (report_out.empty()) {
        std::cout << scoring::serialize(rep);
      } else {
        std::ofstream(report_out) << scoring::serialize(rep);
      }
      std::cerr << "private: tpr=" << rep.overall.tpr << " tnr=" << rep.overall.tnr << " bac=" << rep.overall.bac;
      if (rep.roc) std::cerr << " auc=" << rep.auc << " eer=" << rep.eer;
      std::cerr << '\n';
      if (!public_manifest.empty()) {
        if (salt.empty()) {
          if (const char* s = std::getenv(kSaltEnv)) salt = s;
        }
        if (salt.empty()) fail(ErrorCode::kInvalidArgument, std::string("public report needs --salt or $") + kSaltEnv);
        const auto pub = manifest::load_manifest(public_manifest);
        std::set<std::string> ids;
        for (const auto& s : pub.samples) ids.insert(s.sample_id);
        std::vector<scoring::DecisionRecord> pub_records;
        for (const auto& r : sub.records) {
          if (ids.count(r.sample_id)) pub_records.push_back(r);
        }
        const auto anon = manifest::anonymize_sources(pub, salt);
        const auto prep = scoring::full_report(pub_records, pub, {&anon, !no_roc});
        if (public_report_out.empty()) fail(ErrorCode::kInvalidArgument, "--public-manifest needs --public-out");
        std::ofstream(public_report_out) << scoring::serialize(prep);
        std::cerr << "public: tpr=" << prep.overall.tpr << " tnr=" << prep.overall.tnr << " bac=" << prep.overall.bac
                  << '\n';
      }
      return cli::kExitOk;
    };
  });

  // serve / publish ----------------------------------------------------------
  auto* serve = app.add_subcommand("serve", "Serve the leaderboard API");
  std::string data_dir, host = "127.0.0.1", ui_dir;
  int port = 8080;
  serve->add_option("--data-dir", data_dir, "Directory holding the event log")->required();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Port (0: pick a free one)")->capture_default_str();
  serve->add_option("--ui-dir", ui_dir, "Static web client served under /ui/");
  serve->callback([&] {
    action = [&] {
      board::Board b(fs::path(data_dir) / "events.jsonl");
      auto opt = board::options_from_env();
      opt.ui_dir = ui_dir;
      if (opt.operator_token.empty()) {
        std::cerr << "warning: $" << board::kOperatorTokenEnv << " unset; operator endpoints will refuse\n";
      }
      httplib::Server srv;
      board::install_routes(srv, b, opt);
      const int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
      if (bound < 0) fail(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
      std::cout << "listening on http://" << host << ":" << bound << std::endl;
      srv.listen_after_bind();
      return cli::kExitOk;
    };
  });

  auto* publish = app.add_subcommand("publish", "Post a scored run to a running leaderboard");
  std::string server = "http://127.0.0.1:8080", key;
  std::optional<std::int64_t> timestamp_ms;
  publish->add_option("--server", server, "Leaderboard base URL")->capture_default_str();
  publish->add_option("--team", team, "Team id")->required();
  publish->add_option("--task", task_name, "Task")->capture_default_str();
  publish->add_option("--public-report", public_report_out, "Public report JSON")->required();
  publish->add_option("--private-report", report_out, "Private report JSON")->required();
  publish->add_option("--key", key, "Idempotency key (default: hash of the reports)");
  publish->add_option("--timestamp-ms", timestamp_ms, "Run time, epoch milliseconds (default: now)");
  publish->callback([&] {
    action = [&] {
      auto slurp = [](const std::string& p) {
        std::ifstream in(p);
        if (!in) fail(ErrorCode::kIo, "cannot read " + p, {p});
        return json::parse(in);
      };
      const auto pub = slurp(public_report_out), priv = slurp(report_out);
      if (key.empty()) key = team + "-" + util::hex64(util::fnv1a64(pub.dump() + priv.dump()));
      json body{{"team_id", team}, {"task", task_name}, {"public_report", pub}, {"private_report", priv}};
      if (timestamp_ms) body["timestamp_ms"] = *timestamp_ms;
      const char* token = std::getenv(board::kOperatorTokenEnv);
      httplib::Client client(server);
      httplib::Headers headers{{"Idempotency-Key", key}};
      if (token) headers.emplace("Authorization", std::string("Bearer ") + token);
      const auto res = client.Post("/api/v1/runs", headers, body.dump(), "application/json");
      if (!res) fail(ErrorCode::kIo, "cannot reach " + server);
      std::cout << res->body << '\n';
      if (res->status == 201) return cli::kExitOk;
      const auto err = json::parse(res->body, nullptr, false);
      const std::string code = err.is_object() ? err.value("error", std::string{}) : std::string{};
      for (int i = 0; i <= static_cast<int>(ErrorCode::kRoundActive); ++i) {
        if (to_string(static_cast<ErrorCode>(i)) == code) return cli::exit_code_for(static_cast<ErrorCode>(i));
      }
      return cli::kExitInternal;
    };
  });

  // toy corpus ---------------------------------------------------------------
  auto* toy = app.add_subcommand("toy-corpus", "Write the synthetic 4-source desk corpus");
  testing::ToyCorpusOptions toy_opt;
  toy->add_option("--out", out, "Corpus root")->required();
  toy->add_option("--clips", toy_opt.clips_per_source, "Clips per source")->capture_default_str();
  toy->add_option("--seconds", toy_opt.clip_seconds, "Clip length")->capture_default_str();
  toy->add_option("--rate", toy_opt.sample_rate_hz, "Sample rate")->capture_default_str();
  toy->add_option("--seed", seed, "Corpus seed");
  toy->callback([&] {
    action = [&] {
      toy_opt.seed = resolve_seed(seed);
      const auto cat = testing::write_toy_corpus(out, toy_opt);
      std::cout << "wrote " << 4 * toy_opt.clips_per_source << " clips under " << out << "; catalog " << cat.string()
                << '\n';
      return cli::kExitOk;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kExitOk : cli::kExitUsage;
  }
  try {
    return action ? action() : cli::kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (!e.ids().empty()) {
      std::cerr << "  ids:";
      std::size_t shown = 0;
      for (const auto& id : e.ids()) {
        if (shown++ == 20) {
          std::cerr << " ... (" << e.ids().size() << " total)";
          break;
        }
        std::cerr << ' ' << id;
      }
      std::cerr << '\n';
    }
    return cli::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return cli::kExitInternal;
  }
}
