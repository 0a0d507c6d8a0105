#pragma once

#include "common.hpp"
#include "data.hpp"
#include "objective.hpp"
#include "mtgrad.hpp"
#include "tree.hpp"
#include "booster.hpp"
#include "config.hpp"
#include "model_io.hpp"
#include "metrics.hpp"
#include "synthetic.hpp"
#include "kfold.hpp"
