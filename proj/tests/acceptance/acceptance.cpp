// Acceptance suite: one PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <httplib.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sdeval/board/server.hpp"
#include "sdeval/sdeval.hpp"
#include "sdeval/testing/toy_corpus.hpp"

using namespace sdeval;
using manifest::Label;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

namespace {

// Collects failed checks for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    if (!(std::fabs(got - want) <= tol)) {
      std::ostringstream s;
      s.precision(17);
      s << what << ": got " << got << ", want " << want << " +/- " << tol;
      failures_.push_back(s.str());
    }
  }
  void note(const std::string& n) { notes_.push_back(n); }
  bool ok() const { return failures_.empty(); }
  const std::vector<std::string>& failures() const { return failures_; }
  const std::vector<std::string>& notes() const { return notes_; }

 private:
  std::vector<std::string> failures_, notes_;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Leaderboard rows: team, TPR, TNR, printed BAC.
struct Row {
  const char* team;
  double tpr, tnr, printed_bac;
};
constexpr Row kTask1Rows[] = {{"ISP", 0.79, 0.95, 0.87},
                              {"VIP", 0.74, 0.80, 0.77},
                              {"JAI", 0.46, 0.90, 0.68},
                              {"ANO", 0.77, 0.71, 0.74},
                              {"DMF", 0.86, 0.49, 0.67}};

void bac_reproduction(Check& c) {
  const auto t0 = Clock::now();
  const auto m = fixture::manifest({{"gen_a", Label::kGenerated, 60}, {"gen_b", Label::kGenerated, 40},
                                    {"real_a", Label::kReal, 50}, {"real_b", Label::kReal, 50}});
  for (const auto& row : kTask1Rows) {
    const auto recs = fixture::decisions(m, row.tpr, row.tnr);
    const auto counts = scoring::confusion(recs, m);
    c.expect(counts == oracle::confusion(recs, m), std::string(row.team) + " confusion differs from oracle");
    c.near(counts.tpr(), row.tpr, 1e-12, std::string(row.team) + " TPR");
    c.near(counts.tnr(), row.tnr, 1e-12, std::string(row.team) + " TNR");
    const double bac = scoring::balanced_accuracy(counts);
    c.near(bac, (row.tpr + row.tnr) / 2.0, 1e-12, std::string(row.team) + " BAC");
    c.near(bac, row.printed_bac, 0.005 + 1e-12, std::string(row.team) + " BAC vs two-decimal value");
    c.near(scoring::full_report(recs, m).overall.bac, bac, 1e-12, std::string(row.team) + " report BAC");
  }
  c.near(scoring::balanced_accuracy(scoring::confusion(fixture::decisions(m, 0.79, 0.95), m)), 0.87, 1e-12,
         "ISP BAC");
  const double dt = seconds_since(t0);
  c.expect(dt < 1.0, "runtime " + std::to_string(dt) + " s");
  c.note("5 rows, " + std::to_string(dt).substr(0, 6) + " s");
}

void conditioned_algebra(Check& c) {
  // Generated-source direction: BAC|src = 0.97 at global TNR 0.95.
  {
    auto m = fixture::manifest({{"elevenlabs", Label::kGenerated, 100}, {"other_tts", Label::kGenerated, 100},
                                {"real_a", Label::kReal, 100}});
    auto recs = fixture::decisions(m, 0.59, 0.95);
    std::size_t i = 0;
    for (auto& r : recs) {
      if (r.sample_id.starts_with("elevenlabs_")) r.decision = i++ < 99 ? Label::kGenerated : Label::kReal;
    }
    const double tnr = scoring::confusion(recs, m).tnr();
    const double cond = scoring::conditioned_bac_generated(recs, m, "elevenlabs", tnr);
    c.near(cond, 0.97, 1e-12, "elevenlabs conditioned BAC");
    c.near(2.0 * cond - tnr, 0.99, 1e-12, "elevenlabs TPR recovered");
  }
  // Real-source direction: BAC|src = 0.62 at global TPR 0.79.
  {
    auto m = fixture::manifest({{"gen_a", Label::kGenerated, 100}, {"arabic", Label::kReal, 100},
                                {"english", Label::kReal, 100}});
    auto recs = fixture::decisions(m, 0.79, 0.90);
    std::size_t i = 0;
    for (auto& r : recs) {
      if (r.sample_id.starts_with("arabic_")) r.decision = i++ < 45 ? Label::kReal : Label::kGenerated;
    }
    const double tpr = scoring::confusion(recs, m).tpr();
    const double cond = scoring::conditioned_bac_real(recs, m, "arabic", tpr);
    c.near(cond, 0.62, 1e-12, "arabic conditioned BAC");
    c.near(2.0 * cond - tpr, 0.45, 1e-12, "arabic TNR recovered");
  }
  // Equal counts: the mean of conditioned BACs is the overall BAC.
  std::mt19937 gen(21);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 20 + gen() % 80;
    auto m = fixture::manifest({{"g1", Label::kGenerated, n}, {"g2", Label::kGenerated, n}, {"g3", Label::kGenerated, n},
                                {"r1", Label::kReal, n}, {"r2", Label::kReal, n}});
    std::vector<scoring::DecisionRecord> recs;
    for (const auto& s : m.samples) recs.push_back({s.sample_id, gen() % 3 ? s.label : Label::kGenerated, 0, 0});
    const auto all = scoring::confusion(recs, m);
    const double bac = scoring::balanced_accuracy(all);
    double gen_mean = 0.0, real_mean = 0.0;
    for (const char* s : {"g1", "g2", "g3"}) gen_mean += scoring::conditioned_bac_generated(recs, m, s, all.tnr()) / 3.0;
    for (const char* s : {"r1", "r2"}) real_mean += scoring::conditioned_bac_real(recs, m, s, all.tpr()) / 2.0;
    c.near(gen_mean, bac, 1e-12, "mean generated-conditioned BAC, trial " + std::to_string(trial));
    c.near(real_mean, bac, 1e-12, "mean real-conditioned BAC, trial " + std::to_string(trial));
  }
  c.note("0.97->0.99, 0.62->0.45, 50 equal-count fixtures");
}

void roc_oracle(Check& c) {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(1234);
  std::size_t points = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + gen() % 199;
    std::vector<scoring::ScoredLabel> v;
    const bool coarse = trial % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = coarse ? static_cast<double>(gen() % 10) : std::ldexp(static_cast<double>(gen() >> 11), -53);
      v.push_back({s, i == 0 ? true : (i == 1 ? false : (gen() & 1) == 1)});
    }
    const auto curve = scoring::roc_from_scores(v);
    const auto ref = oracle::roc(v);
    if (curve.points.size() != ref.size()) {
      c.expect(false, "trial " + std::to_string(trial) + ": point count differs");
      continue;
    }
    for (std::size_t i = 0; i < ref.size(); ++i) {
      c.expect(curve.points[i].fpr == ref[i].fpr && curve.points[i].tpr == ref[i].tpr,
               "trial " + std::to_string(trial) + " point " + std::to_string(i));
    }
    points += ref.size();
  }
  std::vector<scoring::ScoredLabel> sep, diag;
  for (int i = 0; i < 100; ++i) {
    sep.push_back({0.6 + i * 1e-3, true});
    sep.push_back({0.4 - i * 1e-3, false});
    diag.push_back({static_cast<double>(i), true});
    diag.push_back({static_cast<double>(i), false});
  }
  c.near(scoring::eer(scoring::roc_from_scores(sep)), 0.0, 0.0, "separated EER");
  c.near(scoring::eer(scoring::roc_from_scores(diag)), 0.5, 1e-12, "diagonal EER");
  const double dt = seconds_since(t0);
  c.expect(dt < 30.0, "runtime " + std::to_string(dt) + " s");
  c.note("200 fixtures, " + std::to_string(points) + " points, " + std::to_string(dt).substr(0, 6) + " s");
}

void dsp_contracts(Check& c) {
  const auto speech = oracle::sine(440.0, 2.0, 16000, 0.3);
  for (double snr : {15.0, 25.0, 40.0}) {
    const auto r = augment::add_noise(speech, snr, 77);
    c.near(audio::measured_snr_db(speech.channel(0), r.audio.channel(0)), snr, 0.5,
           "add_noise SNR " + std::to_string(snr));
  }
  const int fs = 48000;
  for (double hz : {25.0, 1000.0, 10000.0}) {
    const auto x = oracle::sine(hz, 2.0, fs);
    const double gain = oracle::steady_rms_db(augment::speech_filter(x).audio.channel(0)) -
                        oracle::steady_rms_db(x.channel(0));
    if (hz == 1000.0) {
      c.near(gain, 0.0, 1.0, "speech_filter 1 kHz gain dB");
    } else {
      c.expect(gain <= -20.0, "speech_filter " + std::to_string(hz) + " Hz gain " + std::to_string(gain) + " dB");
    }
  }
  {
    const auto x = oracle::sine(440.0, 10.0, 16000);
    const auto y = augment::time_stretch(x, 1.25);
    c.near(y.duration_s(), 8.0, 8.0 * 0.02, "time_stretch duration");
    c.near(oracle::dominant_frequency(y.channel(0), 16000, 380, 500), 440.0, 440.0 * 0.02, "time_stretch pitch");
  }
  {
    const auto x = oracle::sine(440.0, 4.0, 16000);
    const auto y = augment::pitch_shift(x, 2.0);
    c.near(oracle::dominant_frequency(y.channel(0), 16000, 400, 580), 493.9, 493.9 * 0.02, "pitch_shift frequency");
    c.near(y.duration_s(), x.duration_s(), x.duration_s() * 0.01, "pitch_shift duration");
  }
  std::mt19937 gen(64);
  std::uniform_real_distribution<float> d(-0.9f, 0.9f);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<float> x(64), h(1 + gen() % 64);
    for (auto& v : x) v = d(gen);
    for (auto& v : h) v = d(gen);
    const auto got = launder::convolve(x, h);
    const auto ref = oracle::convolve(x, h);
    c.expect(got.size() == ref.size(), "convolution length");
    for (std::size_t i = 0; i < std::min(got.size(), ref.size()); ++i) {
      c.near(got[i], ref[i], 1e-6, "convolution sample " + std::to_string(i));
    }
    const auto buf = audio::AudioBuffer::mono(x, 16000);
    const auto y = launder::convolve_reverb(buf, {"delta", {1.0f}, 16000});
    c.expect(y.frames() == 64, "delta reverb length");
    for (std::size_t i = 0; i < std::min<std::size_t>(64, y.frames()); ++i) {
      c.near(y.channel(0)[i], x[i], 1e-6, "delta reverb sample " + std::to_string(i));
    }
  }
  c.note("noise, filter, stretch, pitch, reverb");
}

void dataset_arithmetic(Check& c) {
  std::vector<fixture::SourceSpec> specs;
  for (int i = 0; i < 13; ++i) specs.push_back({"gen" + std::to_string(i), Label::kGenerated, 200, i % 2 == 0});
  for (int i = 0; i < 21; ++i) specs.push_back({"real" + std::to_string(i), Label::kReal, 200, i % 2 == 1});
  const auto t1 = fixture::manifest(specs);
  const auto plan = augment::default_task2_plan();
  const auto t2 = manifest::derive_task2_manifest(t1, plan, 20, 5);
  const auto t3 = manifest::derive_task3_manifest(t1, launder::default_task3_techniques(), 50, 6);
  for (const auto& src : t1.sources) {
    if (src.kind != Label::kGenerated) continue;
    c.expect(t2.counts_by_source().at(src.source_id) == 20 * (plan.size() + 1),
             src.source_id + " task2 count " + std::to_string(t2.counts_by_source().at(src.source_id)));
    c.expect(t3.counts_by_source().at(src.source_id) == 50 * 4, src.source_id + " task3 count");
  }
  c.expect(20 * (plan.size() + 1) == 380, "20 x 19");
  for (const auto* derived : {&t2, &t3}) {
    std::size_t reals = 0;
    for (const auto& s : derived->samples) {
      if (s.label != Label::kReal) continue;
      ++reals;
      const auto* orig = t1.find_sample(s.sample_id);
      c.expect(orig && manifest::serialize(*orig) == manifest::serialize(s), "real sample changed: " + s.sample_id);
    }
    c.expect(reals == 21 * 200, "real sample count");
  }
  for (const auto* m : {&t1, &t2, &t3}) {
    const auto pub = manifest::project_public(*m);
    c.expect(pub.samples.size() < m->samples.size() && !pub.samples.empty(), "public projection not strict");
    c.expect(manifest::validate_manifest(*m, {&pub, m == &t3 ? &t1 : nullptr}).ok(), "validation with public subset");
    for (const auto& s : pub.samples) {
      const auto* p = m->find_sample(s.sample_id);
      c.expect(p && *p == s, "public sample not in private manifest");
    }
  }
  c.note("task2 380/source, task3 200/source");
}

struct ToyWorld {
  fs::path root;
  manifest::Manifest t1;
};

ToyWorld make_toy(const std::string& tag) {
  ToyWorld w{oracle::scratch_dir(tag), {}};
  testing::ToyCorpusOptions o;
  o.clip_seconds = 0.5;
  manifest::Task1Options opt;
  opt.catalog = manifest::SourceCatalog::load(testing::write_toy_corpus(w.root / "toy", o));
  w.t1 = manifest::build_task1_manifest(w.root / "toy/real", w.root / "toy/generated", 10, 3, opt);
  manifest::save_manifest(w.root / "t1.json", w.t1);
  return w;
}

void protocol(Check& c) {
  const auto w = make_toy("protocol");
  runner::SubmissionJob job{"team_a", "task1", {}, w.root / "t1.json", w.root / "toy", 1760000000};
  runner::RunConfig cfg;

  job.entry_command = {SDEVAL_SLEEP_PROBE};
  cfg.time_budget_s = 2;
  auto t0 = Clock::now();
  const auto slept = runner::submit(job, cfg, w.root / "runs_sleep");
  const double dt = seconds_since(t0);
  c.expect(slept.status == runner::RunStatus::kTimeout, "sleep probe status " + runner::to_string(slept.status));
  c.expect(dt < 2.0 + 5.0, "sleep probe took " + std::to_string(dt) + " s");
  c.expect(!slept.captured_submission, "partial submission kept");

  job.entry_command = {SDEVAL_CONNECT_PROBE};
  cfg.time_budget_s = 60;
  const auto net = runner::submit(job, cfg, w.root / "runs_net");
  c.expect(net.status == runner::RunStatus::kCompleted, "connect probe status " + runner::to_string(net.status));
  c.expect(!net.network_attempts.empty(), "no network attempt logged");
  {
    std::ifstream err(w.root / "runs_net" / net.job_id / "stderr.log");
    const std::string log((std::istreambuf_iterator<char>(err)), {});
    c.expect(log.find("connect 1.1.1.1") != std::string::npos && log.find(": ok") == std::string::npos,
             "connect failures not logged by probe");
  }

  job.entry_command = {"/bin/true"};
  std::vector<runner::RunStatus> got;
  for (int i = 0; i < 6; ++i) {
    job.submitted_at = 1760054400 + 3600 * i;  // one UTC day
    got.push_back(runner::submit(job, cfg, w.root / "runs_quota").status);
  }
  for (int i = 0; i < 5; ++i) c.expect(got[i] != runner::RunStatus::kQuotaRejected, "early submission rejected");
  c.expect(got[5] == runner::RunStatus::kQuotaRejected, "6th submission accepted");

  const auto staged = runner::stage_dataset(w.t1, w.root / "toy", w.root / "stage");
  std::vector<std::string> tokens{"real", "generated", "label", "synthetic", "fake", "spoof", "bonafide"};
  for (const auto& s : w.t1.sources) {
    tokens.push_back(s.source_id);
    tokens.push_back(s.display_name);
  }
  const auto hits = runner::scan_for_tokens(staged.dir, tokens);
  c.expect(hits.empty(), std::to_string(hits.size()) + " label tokens in staged tree" +
                             (hits.empty() ? "" : " (" + hits[0].token + " in " + hits[0].file.string() + ")"));
  c.expect(staged.count == w.t1.samples.size(), "staged count");
  c.note("timeout in " + std::to_string(dt).substr(0, 5) + " s, " + std::to_string(net.network_attempts.size()) +
         " blocked connects, quota 5/day, 0 tokens");
  runner::remove_staged(w.root);
  fs::remove_all(w.root);
}

// Runs the CLI to completion; returns exit code and stdout.
std::pair<int, std::string> run_cli(const std::vector<std::string>& args, Check& c) {
  util::ProcessOptions o;
  o.argv = {SDEVAL_CLI};
  o.argv.insert(o.argv.end(), args.begin(), args.end());
  o.timeout = std::chrono::seconds(240);
  o.tail_bytes = 1 << 20;
  const auto r = util::run_process(o);
  if (r.exit_code != 0) c.expect(false, "sdeval " + args[0] + " exited " + std::to_string(r.exit_code) + ": " + r.stderr_tail);
  return {r.exit_code, r.stdout_tail};
}

void end_to_end(Check& c) {
  const auto t0 = Clock::now();
  const auto dir = oracle::scratch_dir("e2e");
  auto p = [&](const char* rel) { return (dir / rel).string(); };
  auto step = [&](std::vector<std::string> args) { return run_cli(args, c).first == 0; };

  bool ok = step({"toy-corpus", "--out", p("toy"), "--clips", "10", "--seed", "7"});
  ok = ok && step({"manifest", "build", "--real", p("toy/real"), "--generated", p("toy/generated"), "--per-source", "10",
                   "--catalog", p("toy/catalog.json"), "--out", p("t1.json"), "--public-out", p("t1_pub.json"),
                   "--seed", "11"});
  std::vector<augment::AugmentationSpec> plan{fixture::op("noise", augment::AugmentOp::kNoise),
                                              fixture::op("pitch_shift", augment::AugmentOp::kPitchShift),
                                              fixture::op("time_stretch", augment::AugmentOp::kTimeStretch),
                                              fixture::op("speech_filter", augment::AugmentOp::kSpeechFilter),
                                              fixture::op("resample_up", augment::AugmentOp::kResampleUp)};
  plan[4].target_rate_hz = 48000;
  std::ofstream(p("plan.json")) << json(plan).dump(2);
  ok = ok && step({"manifest", "derive", "--task", "2", "--from", p("t1.json"), "--clips", "5", "--plan", p("plan.json"),
                   "--out", p("t2.json"), "--public-out", p("t2_pub.json"), "--seed", "12"});
  ok = ok && step({"augment", "apply", "--manifest", p("t2.json"), "--audio-root", p("toy"), "--plan", p("plan.json"),
                   "--jobs", "4", "--public-out", p("t2_pub.json")});
  ok = ok && step({"manifest", "validate", p("t2.json"), "--public", p("t2_pub.json")});
  if (!ok) return;

  const auto [rc, out] = run_cli({"run", "submit", "--team", "desk", "--task", "task2", "--manifest", p("t2.json"),
                                  "--audio-root", p("toy"), "--runs-dir", p("runs"), "--budget", "120", "--",
                                  SDEVAL_FLATNESS},
                                 c);
  if (rc != 0) return;
  const auto run = json::parse(out);
  const std::string submission = run.at("captured_submission");
  ok = step({"score", "--manifest", p("t2.json"), "--submission", submission, "--public-manifest", p("t2_pub.json"),
             "--salt", "desk-salt", "--out", p("private.json"), "--public-out", p("public.json")});
  if (!ok) return;

  int pipe_fd[2];
  if (::pipe(pipe_fd) != 0) return c.expect(false, "pipe");
  const pid_t pid = ::fork();
  if (pid == 0) {
    ::dup2(pipe_fd[1], 1);
    ::close(pipe_fd[0]);
    ::setenv(board::kOperatorTokenEnv, "desk-token", 1);
    ::execl(SDEVAL_CLI, SDEVAL_CLI, "serve", "--data-dir", p("board").c_str(), "--port", "0", nullptr);
    ::_exit(127);
  }
  ::close(pipe_fd[1]);
  std::string banner;
  for (char ch; ::read(pipe_fd[0], &ch, 1) == 1 && ch != '\n';) banner += ch;
  const auto colon = banner.rfind(':');
  const std::string base = colon == std::string::npos ? "" : "http://127.0.0.1" + banner.substr(colon);
  c.expect(!base.empty(), "server banner: " + banner);

  if (!base.empty()) {
    util::ProcessOptions o;
    o.argv = {SDEVAL_CLI, "publish", "--server", base, "--team", "desk", "--task", "task2",
              "--public-report", p("public.json"), "--private-report", p("private.json")};
    ::setenv(board::kOperatorTokenEnv, "desk-token", 1);
    const auto pub_rc = util::run_process(o);
    c.expect(pub_rc.exit_code == 0, "publish: " + pub_rc.stdout_tail + pub_rc.stderr_tail);

    httplib::Client client(base);
    const auto pub = client.Get("/api/v1/leaderboard?task=task2");
    const auto priv = client.Get("/api/v1/leaderboard?task=task2&view=private",
                                 {{"Authorization", "Bearer desk-token"}});
    c.expect(pub && pub->status == 200, "public leaderboard");
    c.expect(priv && priv->status == 200, "private leaderboard");
    if (pub && priv && pub->status == 200 && priv->status == 200) {
      const auto pj = json::parse(pub->body), vj = json::parse(priv->body);
      c.expect(pj["entries"].size() == 1, "one public entry");
      const auto m = manifest::load_manifest(p("t2.json"));
      for (const auto& s : m.sources) {
        c.expect(pub->body.find(s.source_id) == std::string::npos, "public view names " + s.source_id);
        c.expect(pub->body.find(s.display_name) == std::string::npos, "public view names " + s.display_name);
        c.expect(priv->body.find(s.display_name) != std::string::npos, "private view lacks " + s.display_name);
      }
      for (const auto& [k, _] : pj["entries"][0]["per_source"].items()) {
        c.expect(k.size() == 3 && (k[0] == 'G' || k[0] == 'R'), "public key " + k);
      }
      c.note("flatness detector BAC " + std::to_string(vj["entries"][0]["best_bac"].get<double>()).substr(0, 5) +
             " private, " + std::to_string(pj["entries"][0]["best_bac"].get<double>()).substr(0, 5) + " public");
    }
  }
  ::kill(pid, SIGTERM);
  ::waitpid(pid, nullptr, 0);
  ::close(pipe_fd[0]);
  const double dt = seconds_since(t0);
  c.expect(dt < 300.0, "runtime " + std::to_string(dt) + " s");
  c.note(std::to_string(dt).substr(0, 5) + " s");
  fs::remove_all(dir);
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"bac_reproduction", bac_reproduction}, {"conditioned_metric_algebra", conditioned_algebra},
      {"roc_eer_oracle", roc_oracle},         {"dsp_contracts", dsp_contracts},
      {"dataset_arithmetic", dataset_arithmetic}, {"protocol_enforcement", protocol},
      {"end_to_end_desk_run", end_to_end}};
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    std::string detail;
    for (const auto& n : c.notes()) detail += (detail.empty() ? "" : "; ") + n;
    if (c.ok()) {
      std::cout << "PASS " << name << (detail.empty() ? "" : " (" + detail + ")") << std::endl;
    } else {
      ++failed;
      std::cout << "FAIL " << name << ": " << c.failures().front();
      if (c.failures().size() > 1) std::cout << " (+" << c.failures().size() - 1 << " more)";
      std::cout << std::endl;
      for (std::size_t i = 1; i < std::min<std::size_t>(c.failures().size(), 10); ++i) {
        std::cout << "     " << c.failures()[i] << '\n';
      }
    }
  }
  return failed;
}
