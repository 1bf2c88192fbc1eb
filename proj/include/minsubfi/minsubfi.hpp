#pragma once

#include "minsubfi/errors.hpp"
#include "minsubfi/features.hpp"
#include "minsubfi/subdominance.hpp"
#include "minsubfi/alpha_opt.hpp"
#include "minsubfi/env.hpp"
#include "minsubfi/cartpole.hpp"
#include "minsubfi/lander.hpp"
#include "minsubfi/demos.hpp"
#include "minsubfi/mlp.hpp"
#include "minsubfi/policy.hpp"
#include "minsubfi/seeds.hpp"
#include "minsubfi/learners.hpp"
#include "minsubfi/repr_learn.hpp"
#include "minsubfi/eval.hpp"
#include "minsubfi/run_config.hpp"
