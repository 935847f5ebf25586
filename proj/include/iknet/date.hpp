// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace iknet {

using Date = std::chrono::year_month_day;

/// Parses YYYY-MM-DD; throws ValidationError on anything else.
Date parse_date(std::string_view text);
std::string format_date(const Date& date);
int year_of(const Date& date);
int month_of(const Date& date);
Date make_date(int year, unsigned month, unsigned day);
/// Days since 1970-01-01.
long day_number(const Date& date);
Date from_day_number(long days);
bool is_weekend(const Date& date);

}  // namespace iknet
