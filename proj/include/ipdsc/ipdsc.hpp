#pragma once

#include "ipdsc/error.hpp"
#include "ipdsc/random.hpp"
#include "ipdsc/evidence.hpp"
#include "ipdsc/linalg.hpp"
#include "ipdsc/annealer.hpp"
#include "ipdsc/memory.hpp"
#include "ipdsc/tracker.hpp"
#include "ipdsc/harness.hpp"
#include "ipdsc/io.hpp"
