#pragma once

#include "wpx/bandit/features.hpp"
#include "wpx/bandit/posterior.hpp"
#include "wpx/bandit/ranker.hpp"
#include "wpx/dml/crossfit.hpp"
#include "wpx/dml/deaverage.hpp"
#include "wpx/dml/estimator.hpp"
#include "wpx/dml/panel.hpp"
#include "wpx/dml/regression.hpp"
#include "wpx/domain.hpp"
#include "wpx/error.hpp"
#include "wpx/harness/ab.hpp"
#include "wpx/harness/experiment.hpp"
#include "wpx/harness/metrics.hpp"
#include "wpx/harness/offline_eval.hpp"
#include "wpx/page_metrics.hpp"
#include "wpx/rng.hpp"
#include "wpx/sim/panel_emit.hpp"
#include "wpx/sim/session.hpp"
#include "wpx/sim/world.hpp"
