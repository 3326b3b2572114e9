#pragma once

// Core library. The experiment harness lives under bbsi/harness/.

#include "bbsi/analytic.hpp"
#include "bbsi/conditional_law.hpp"
#include "bbsi/dataset.hpp"
#include "bbsi/diagnostics.hpp"
#include "bbsi/errors.hpp"
#include "bbsi/mlp.hpp"
#include "bbsi/model_id.hpp"
#include "bbsi/moments.hpp"
#include "bbsi/normal.hpp"
#include "bbsi/pipeline.hpp"
#include "bbsi/random.hpp"
#include "bbsi/selectors/bh.hpp"
#include "bbsi/selectors/dtl.hpp"
#include "bbsi/selectors/lasso.hpp"
#include "bbsi/selectors/repeated.hpp"
#include "bbsi/selectors/selector.hpp"
#include "bbsi/training_set.hpp"
