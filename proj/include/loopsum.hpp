#pragma once

// Everything: parsing, path programs, recurrences, summaries, emitters.

#include "loopsum/cli.hpp"
