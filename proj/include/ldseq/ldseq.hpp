#pragma once

// Umbrella header. Users should generally include only this file.

#include <ldseq/auditor.hpp>
#include <ldseq/errors.hpp>
#include <ldseq/oracle.hpp>
#include <ldseq/random_schedules.hpp>
#include <ldseq/rational.hpp>
#include <ldseq/rotor.hpp>
#include <ldseq/schedule.hpp>
#include <ldseq/schedule_io.hpp>
#include <ldseq/stacker.hpp>
#include <ldseq/symbol.hpp>
#include <ldseq/trace.hpp>
