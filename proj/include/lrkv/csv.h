// Copyright 2026 The LRKV Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LRKV_CSV_H_
#define LRKV_CSV_H_

#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace lrkv {

// Locale-independent number formatting (always '.' as decimal separator).
std::string format_fixed(double v, int decimals);
// Shortest representation that round-trips; "nan"/"inf" for non-finite.
std::string format_real(double v);
std::string format_int(std::int64_t v);

// RFC 4180 style: fields containing ',', '"', CR or LF are quoted and inner
// quotes doubled. Lines end with '\n'.
std::string csv_escape(std::string_view field);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void header(std::initializer_list<std::string_view> columns);
  void header(const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& fields);

  std::size_t columns() const { return columns_; }

 private:
  void write(const std::vector<std::string>& fields);

  std::ostream& os_;
  std::size_t columns_ = 0;
};

}  // namespace lrkv

#endif  // LRKV_CSV_H_
