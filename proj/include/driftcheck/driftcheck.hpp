#pragma once

#include "driftcheck/backend.hpp"
#include "driftcheck/builders.hpp"
#include "driftcheck/config.hpp"
#include "driftcheck/env.hpp"
#include "driftcheck/errors.hpp"
#include "driftcheck/graph.hpp"
#include "driftcheck/half.hpp"
#include "driftcheck/image.hpp"
#include "driftcheck/jsonl.hpp"
#include "driftcheck/kernels.hpp"
#include "driftcheck/metrics.hpp"
#include "driftcheck/model_json.hpp"
#include "driftcheck/nms.hpp"
#include "driftcheck/prng.hpp"
#include "driftcheck/record.hpp"
#include "driftcheck/reductions.hpp"
#include "driftcheck/runner.hpp"
#include "driftcheck/stats.hpp"
#include "driftcheck/summary.hpp"
#include "driftcheck/tensor.hpp"
#include "driftcheck/tensor_io.hpp"
#include "driftcheck/verify.hpp"
#include "driftcheck/version.hpp"
