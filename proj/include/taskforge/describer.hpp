#pragma once

#include <optional>
#include <string>

#include "taskforge/task_space.hpp"

namespace taskforge {

// English question for a task, e.g.
//   "For each airline, predict the number of records where is_delayed is 1,
//    in the next 1 day."
// Column names appear verbatim.
std::string describe(const ExecutableTask& task);

// Template form: the hyperparameter reads "a given value" / "a threshold"
// and the window "the next window" unless supplied.
std::string describe(const TaskTemplate& tmpl, const Epsilon& epsilon = {},
                     std::optional<Duration> window = std::nullopt);

}  // namespace taskforge
