#pragma once

#include "sepopt/circuit.hpp"
#include "sepopt/core.hpp"
#include "sepopt/distance.hpp"
#include "sepopt/frobenius.hpp"
#include "sepopt/local_ham.hpp"
#include "sepopt/nets.hpp"
#include "sepopt/operators.hpp"
#include "sepopt/oracles.hpp"
#include "sepopt/sep_opt.hpp"
