#pragma once

#include "bdirs/baselines.hpp"
#include "bdirs/beamforming.hpp"
#include "bdirs/channel.hpp"
#include "bdirs/config.hpp"
#include "bdirs/fp_core.hpp"
#include "bdirs/harness.hpp"
#include "bdirs/manifold.hpp"
#include "bdirs/rng.hpp"
#include "bdirs/solver.hpp"
#include "bdirs/types.hpp"
