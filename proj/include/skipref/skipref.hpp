#pragma once

#include "skipref/error.hpp"
#include "skipref/io.hpp"
#include "skipref/lts.hpp"
#include "skipref/match.hpp"
#include "skipref/models.hpp"
#include "skipref/random.hpp"
#include "skipref/refinement.hpp"
#include "skipref/sim.hpp"
#include "skipref/vectorizer.hpp"
#include "skipref/wfsk.hpp"
