#pragma once

#include "lpq/axioms.hpp"
#include "lpq/domain.hpp"
#include "lpq/error.hpp"
#include "lpq/loss.hpp"
#include "lpq/order.hpp"
#include "lpq/pipeline.hpp"
#include "lpq/solver.hpp"
#include "lpq/synth.hpp"
