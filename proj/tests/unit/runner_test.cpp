#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sdeval/audio/wav.hpp"
#include "sdeval/manifest/build.hpp"
#include "sdeval/runner/execute.hpp"

using namespace sdeval;
using namespace sdeval::runner;

namespace {

constexpr std::int64_t kDay = 1760000000 / 86400 * 86400;  // a UTC midnight

QuotaEntry entry(const std::string& team, std::int64_t at, bool accepted = true) {
  return {team, "task1", "job", at, accepted};
}

class Staged : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = oracle::scratch_dir("runner");
    m_ = fixture::manifest({{"elevenlabs_v2", manifest::Label::kGenerated, 3},
                            {"librispeech", manifest::Label::kReal, 3}});
    for (auto& s : m_.samples) s.sample_id = manifest::original_sample_id(s.file_path);
    for (const auto& s : m_.samples) {
      audio::write_wav(root_ / "audio" / s.file_path, oracle::sine(200.0, 0.1, 16000));
    }
    manifest::save_manifest(root_ / "manifest.json", m_);
  }
  void TearDown() override {
    std::error_code ec;
    remove_staged(root_);
    fs::remove_all(root_, ec);
  }

  SubmissionJob job(std::vector<std::string> cmd) const {
    return {"team_a", "task1", std::move(cmd), root_ / "manifest.json", root_ / "audio", kDay + 3600};
  }

  fs::path root_;
  manifest::Manifest m_;
};

}  // namespace

TEST(Quota, CountsAcceptedSameUtcDay) {
  std::vector<QuotaEntry> ledger;
  for (int i = 0; i < 5; ++i) ledger.push_back(entry("a", kDay + 60 * i));
  ledger.push_back(entry("a", kDay - 1));
  ledger.push_back(entry("a", kDay + 100, false));
  ledger.push_back(entry("b", kDay + 100));
  EXPECT_EQ(check_quota("a", kDay + 86399, ledger, 5), QuotaDecision::kReject);
  EXPECT_EQ(check_quota("a", kDay + 86400, ledger, 5), QuotaDecision::kAccept);
  EXPECT_EQ(check_quota("b", kDay + 10, ledger, 5), QuotaDecision::kAccept);
  EXPECT_EQ(utc_day(-1), -1);
  EXPECT_EQ(iso_utc(0), "1970-01-01T00:00:00Z");
}

TEST(Quota, LedgerPersists) {
  const auto dir = oracle::scratch_dir("quota");
  QuotaLedger l(dir / "q.jsonl");
  for (int i = 0; i < 5; ++i) EXPECT_EQ(l.admit(entry("a", kDay + i), 5), QuotaDecision::kAccept);
  EXPECT_EQ(l.admit(entry("a", kDay + 9), 5), QuotaDecision::kReject);
  const auto all = QuotaLedger(dir / "q.jsonl").entries();
  ASSERT_EQ(all.size(), 6u);
  EXPECT_FALSE(all.back().accepted);
  fs::remove_all(dir);
}

TEST_F(Staged, StagingHidesLabels) {
  const auto st = stage_dataset(m_, root_ / "audio", root_ / "stage");
  EXPECT_EQ(st.count, 6u);
  std::vector<std::string> tokens{"generated", "real", "elevenlabs", "librispeech", "Display"};
  EXPECT_TRUE(scan_for_tokens(st.dir, tokens).empty());
  auto named = fixture::manifest({{"elevenlabs", manifest::Label::kGenerated, 1}});
  audio::write_wav(root_ / "audio" / named.samples[0].file_path, oracle::sine(200.0, 0.1, 16000));
  const auto leaky = stage_dataset(named, root_ / "audio", root_ / "stage2");
  EXPECT_FALSE(scan_for_tokens(leaky.dir, tokens).empty());
  std::ofstream(root_ / "audio" / "leak.txt") << "this one is REAL";
  EXPECT_FALSE(scan_for_tokens(root_ / "audio", tokens).empty());
  EXPECT_EQ(fs::status(st.listing).permissions() & fs::perms::owner_write, fs::perms::none);
}

TEST_F(Staged, MissingAudioIsReported) {
  fs::remove(root_ / "audio" / m_.samples[0].file_path);
  try {
    stage_dataset(m_, root_ / "audio", root_ / "stage");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingAudio);
    EXPECT_EQ(e.ids(), std::vector<std::string>{m_.samples[0].sample_id});
  }
}

TEST_F(Staged, CompletedRun) {
  RunConfig cfg;
  cfg.time_budget_s = 60;
  const auto r = submit(job({SDEVAL_FLATNESS}), cfg, root_ / "runs");
  EXPECT_EQ(r.status, RunStatus::kCompleted) << r.diagnostics;
  ASSERT_TRUE(r.captured_submission);
  EXPECT_EQ(scoring::parse_submission(*r.captured_submission, m_).records.size(), 6u);
}

TEST_F(Staged, TimeoutDiscardsPartialOutput) {
  RunConfig cfg;
  cfg.time_budget_s = 1;
  const auto r = submit(job({SDEVAL_SLEEP_PROBE}), cfg, root_ / "runs");
  EXPECT_EQ(r.status, RunStatus::kTimeout);
  EXPECT_LT(r.wall_time_s, 1.0 + 5.0);
  EXPECT_FALSE(r.captured_submission);
  EXPECT_FALSE(fs::exists(root_ / "runs" / r.job_id / "out" / "submission.csv"));
}

TEST_F(Staged, NetworkIsDenied) {
  RunConfig cfg;
  cfg.time_budget_s = 30;
  const auto r = submit(job({SDEVAL_CONNECT_PROBE}), cfg, root_ / "runs");
  EXPECT_EQ(r.status, RunStatus::kCompleted) << r.diagnostics;
  EXPECT_FALSE(r.network_attempts.empty());
  std::ifstream err(root_ / "runs" / r.job_id / "stderr.log");
  const std::string log((std::istreambuf_iterator<char>(err)), {});
  EXPECT_EQ(log.find(": ok"), std::string::npos) << log;
}

TEST_F(Staged, FailuresAreClassified) {
  RunConfig cfg;
  cfg.time_budget_s = 30;
  EXPECT_EQ(submit(job({"/bin/sh", "-c", "exit 7"}), cfg, root_ / "runs").status, RunStatus::kCrashed);
  EXPECT_EQ(submit(job({"/bin/sh", "-c", "echo nope > \"$2\"", "sh"}), cfg, root_ / "runs").status,
            RunStatus::kInvalidOutput);
  EXPECT_EQ(submit(job({"/bin/true"}), cfg, root_ / "runs").status, RunStatus::kInvalidOutput);
  EXPECT_EQ(submit(job({"/no/such/binary"}), cfg, root_ / "runs").status, RunStatus::kCrashed);
}

TEST_F(Staged, SixthSubmissionSameDayIsRejected) {
  RunConfig cfg;
  cfg.time_budget_s = 30;
  std::vector<RunStatus> got;
  for (int i = 0; i < 6; ++i) got.push_back(submit(job({"/bin/true"}), cfg, root_ / "runs").status);
  for (int i = 0; i < 5; ++i) EXPECT_NE(got[i], RunStatus::kQuotaRejected);
  EXPECT_EQ(got[5], RunStatus::kQuotaRejected);
  auto next_day = job({"/bin/true"});
  next_day.submitted_at += 86400;
  EXPECT_NE(submit(next_day, cfg, root_ / "runs").status, RunStatus::kQuotaRejected);
}
