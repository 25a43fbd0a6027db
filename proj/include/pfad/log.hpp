#pragma once

#include <functional>
#include <string>
#include <vector>

namespace pfad {

using WarningSink = std::function<void(const std::string&)>;

// Emits a warning through the installed sink (stderr by default).
void warn(const std::string& message);

// Replaces the process-wide sink; returns the previous one.
WarningSink set_warning_sink(WarningSink sink);

// Collects warnings for the lifetime of the object, restoring the previous sink on exit.
class WarningCapture {
 public:
  WarningCapture();
  ~WarningCapture();
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  const std::vector<std::string>& messages() const { return messages_; }
  bool contains(const std::string& needle) const;

 private:
  std::vector<std::string> messages_;
  WarningSink previous_;
};

}  // namespace pfad
