#pragma once

#include "bssr/baselines.hpp"
#include "bssr/errors.hpp"
#include "bssr/eval.hpp"
#include "bssr/inference.hpp"
#include "bssr/io.hpp"
#include "bssr/kernels.hpp"
#include "bssr/math.hpp"
#include "bssr/model.hpp"
#include "bssr/rng.hpp"
#include "bssr/samplers.hpp"
#include "bssr/simgen.hpp"
#include "bssr/version.hpp"
