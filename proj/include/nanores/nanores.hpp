#pragma once

#include "nanores/assembly.hpp"
#include "nanores/audio.hpp"
#include "nanores/classify.hpp"
#include "nanores/config.hpp"
#include "nanores/dynamics.hpp"
#include "nanores/errors.hpp"
#include "nanores/experiments.hpp"
#include "nanores/geometry.hpp"
#include "nanores/io.hpp"
#include "nanores/linalg.hpp"
#include "nanores/manifest.hpp"
#include "nanores/reservoir.hpp"
#include "nanores/rng.hpp"
#include "nanores/solver.hpp"
#include "nanores/synth.hpp"
#include "nanores/threads.hpp"
