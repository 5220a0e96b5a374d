#pragma once

// Convenience umbrella header pulling in the whole library.

#include "padloop/common.hpp"
#include "padloop/eeg.hpp"
#include "padloop/dwt.hpp"
#include "padloop/higuchi.hpp"
#include "padloop/features.hpp"
#include "padloop/rbm.hpp"
#include "padloop/dbn.hpp"
#include "padloop/kernel.hpp"
#include "padloop/gp.hpp"
#include "padloop/finetune.hpp"
#include "padloop/cv.hpp"
#include "padloop/fuzzy.hpp"
#include "padloop/controller.hpp"
#include "padloop/sim.hpp"
#include "padloop/loop.hpp"
#include "padloop/datasets.hpp"
#include "padloop/stats.hpp"
#include "padloop/csv.hpp"
#include "padloop/bundles.hpp"
#include "padloop/config.hpp"
#include "padloop/report.hpp"
