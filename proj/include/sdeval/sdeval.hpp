#pragma once

#include "sdeval/error.hpp"
#include "sdeval/provenance.hpp"
#include "sdeval/util/hash.hpp"
#include "sdeval/util/process.hpp"
#include "sdeval/util/rng.hpp"
#include "sdeval/audio/buffer.hpp"
#include "sdeval/audio/fft.hpp"
#include "sdeval/audio/wav.hpp"
#include "sdeval/manifest/anonymize.hpp"
#include "sdeval/manifest/build.hpp"
#include "sdeval/manifest/types.hpp"
#include "sdeval/manifest/validate.hpp"
#include "sdeval/augment/apply.hpp"
#include "sdeval/augment/filter.hpp"
#include "sdeval/augment/noise.hpp"
#include "sdeval/augment/resample.hpp"
#include "sdeval/augment/stretch.hpp"
#include "sdeval/augment/transcode.hpp"
#include "sdeval/launder/apply.hpp"
#include "sdeval/launder/background.hpp"
#include "sdeval/launder/over_air.hpp"
#include "sdeval/launder/reverb.hpp"
#include "sdeval/launder/spec.hpp"
#include "sdeval/scoring/metrics.hpp"
#include "sdeval/scoring/report.hpp"
#include "sdeval/scoring/roc.hpp"
#include "sdeval/scoring/submission.hpp"
#include "sdeval/runner/execute.hpp"
#include "sdeval/runner/quota.hpp"
#include "sdeval/runner/stage.hpp"
#include "sdeval/board/store.hpp"
