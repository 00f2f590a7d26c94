#pragma once

#include <functional>
#include <string>

namespace tiltdiff {

using WarningSink = std::function<void(const std::string&)>;

/// Emits a warning through the current sink (stderr by default).
void warn(const std::string& message);

/// Replaces the sink and returns the previous one. Passing an empty function
/// restores the stderr sink.
WarningSink set_warning_sink(WarningSink sink);

}  // namespace tiltdiff
