// Copyright 2026 The stockgraph Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace stockgraph {

/// Calendar day, serialized as ISO-8601 `YYYY-MM-DD`.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
  constexpr Date(int y, unsigned m, unsigned d)
      : days_(std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{d}}) {}

  /// Throws ValidationError on anything that is not a valid `YYYY-MM-DD`.
  static Date parse(std::string_view text);

  std::string iso() const;
  constexpr std::chrono::sys_days days() const { return days_; }
  constexpr long serial() const { return days_.time_since_epoch().count(); }

  /// Next Monday-to-Friday day.
  Date next_weekday() const;

  friend constexpr auto operator<=>(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days days_{};
};

}  // namespace stockgraph
