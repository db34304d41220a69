// Umbrella header.

#pragma once

#include "dialeval/alignment.hpp"
#include "dialeval/annotate.hpp"
#include "dialeval/corpus_io.hpp"
#include "dialeval/dialogue_manager.hpp"
#include "dialeval/error_channel.hpp"
#include "dialeval/metrics.hpp"
#include "dialeval/report_render.hpp"
#include "dialeval/rng.hpp"
#include "dialeval/timetable.hpp"
#include "dialeval/trial.hpp"
#include "dialeval/types.hpp"
#include "dialeval/user_model.hpp"
