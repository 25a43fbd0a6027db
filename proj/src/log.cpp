#include "pfad/log.hpp"

#include <iostream>
#include <mutex>

namespace pfad {
namespace {

std::mutex sink_mutex;

WarningSink& sink() {
  static WarningSink s = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
  return s;
}

}  // namespace

void warn(const std::string& message) {
  std::lock_guard lock(sink_mutex);
  if (sink()) sink()(message);
}

WarningSink set_warning_sink(WarningSink s) {
  std::lock_guard lock(sink_mutex);
  return std::exchange(sink(), std::move(s));
}

WarningCapture::WarningCapture() {
  previous_ = set_warning_sink([this](const std::string& m) { messages_.push_back(m); });
}

WarningCapture::~WarningCapture() { set_warning_sink(std::move(previous_)); }

bool WarningCapture::contains(const std::string& needle) const {
  for (const auto& m : messages_)
    if (m.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace pfad
