#pragma once

#include "prefroute/bandits.hpp"
#include "prefroute/domain.hpp"
#include "prefroute/environment.hpp"
#include "prefroute/error.hpp"
#include "prefroute/evaluation.hpp"
#include "prefroute/learning.hpp"
#include "prefroute/numerics.hpp"
#include "prefroute/policy.hpp"
