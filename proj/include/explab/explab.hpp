#pragma once

#include "explab/common.hpp"
#include "explab/experiments.hpp"
#include "explab/exprk.hpp"
#include "explab/fft.hpp"
#include "explab/phi.hpp"
#include "explab/problems.hpp"
#include "explab/rosenbrock.hpp"
#include "explab/spectral.hpp"
#include "explab/tableau.hpp"
#include "explab/version.hpp"
