/* Copyright 2026 The tsadv Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "tsadv/data/data.hpp"

#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace tsadv::data {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                                    : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void cell_error(const std::filesystem::path& path, std::size_t row,
                             std::string_view column, const std::string& what) {
  throw std::invalid_argument(path.string() + ": row " + std::to_string(row) + ", column '" +
                              std::string(column) + "': " + what);
}

}  // namespace

void Dataset::validate() const {
  if (values.rank() != 2) throw std::invalid_argument("dataset: values must be dim x length");
  if (item_ids.size() != dim()) {
    throw std::invalid_argument("dataset: expected " + std::to_string(dim()) + " item ids, got " +
                                std::to_string(item_ids.size()));
  }
  if (!timestamps.empty() && timestamps.size() != length()) {
    throw std::invalid_argument("dataset: timestamps must cover every column");
  }
  if (split_index > length()) throw std::invalid_argument("dataset: split index past the end");
  for (std::size_t j = 0; j < dim(); ++j) {
    for (std::size_t t = 0; t < length(); ++t) {
      if (!std::isfinite(values.at(j, t))) {
        throw std::invalid_argument("dataset: non-finite value for item '" + item_ids[j] +
                                    "' at column " + std::to_string(t));
      }
    }
  }
}

Dataset load_csv(const std::filesystem::path& path, std::size_t min_rows) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path.string() + ": empty file");
  const auto header = split_fields(line);
  if (header.size() < 2) {
    throw std::invalid_argument(path.string() + ": header needs a timestamp and at least one item");
  }
  Dataset ds;
  for (std::size_t c = 1; c < header.size(); ++c) ds.item_ids.emplace_back(trim(header[c]));
  const std::size_t d = ds.item_ids.size();

  std::vector<double> rows;  // length x dim, transposed at the end
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw std::invalid_argument(path.string() + ": row " + std::to_string(row) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(header.size()));
    }
    ds.timestamps.emplace_back(trim(fields[0]));
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const std::string_view cell = trim(fields[c]);
      if (cell.empty()) cell_error(path, row, header[c], "missing value");
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        cell_error(path, row, header[c], "not a number: '" + std::string(cell) + "'");
      }
      if (!std::isfinite(v)) cell_error(path, row, header[c], "non-finite value");
      rows.push_back(v);
    }
  }
  const std::size_t length = ds.timestamps.size();
  if (length < min_rows) {
    throw std::invalid_argument(path.string() + ": " + std::to_string(length) +
                                " data rows, need at least " + std::to_string(min_rows));
  }
  ds.values = Tensor(Shape{d, length});
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t j = 0; j < d; ++j) ds.values.at(j, t) = rows[t * d + j];
  }
  ds.split_index = length;
  ds.validate();
  return ds;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  ds.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "timestamp";
  for (const auto& id : ds.item_ids) out << ',' << id;
  out << '\n';
  char buf[64];
  for (std::size_t t = 0; t < ds.length(); ++t) {
    out << (ds.timestamps.empty() ? std::to_string(t) : ds.timestamps[t]);
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      // Shortest representation that round-trips exactly.
      const auto res = std::to_chars(buf, buf + sizeof(buf), ds.values.at(j, t));
      out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<Window> make_windows(const Dataset& ds, std::size_t T, std::size_t tau,
                                 std::size_t stride) {
  if (T == 0 || tau == 0 || stride == 0) {
    throw std::invalid_argument("make_windows: context, horizon and stride must be positive");
  }
  const std::size_t L = ds.length();
  if (T + tau > L) {
    throw std::invalid_argument("make_windows: context + horizon " + std::to_string(T + tau) +
                                " exceeds series length " + std::to_string(L));
  }
  const std::size_t last = L - T - tau;
  const std::size_t count = last / stride + 1;
  std::vector<Window> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t start = last - (count - 1 - n) * stride;
    Window w;
    w.x = Tensor(Shape{ds.dim(), T});
    w.y_true = Tensor(Shape{ds.dim(), tau});
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      for (std::size_t t = 0; t < T; ++t) w.x.at(j, t) = ds.values.at(j, start + t);
      for (std::size_t t = 0; t < tau; ++t) w.y_true.at(j, t) = ds.values.at(j, start + T + t);
    }
    w.id = n;
    w.start = start;
    w.item_ids = ds.item_ids;
    if (!ds.timestamps.empty()) {
      w.timestamps.assign(ds.timestamps.begin() + static_cast<std::ptrdiff_t>(start),
                          ds.timestamps.begin() + static_cast<std::ptrdiff_t>(start + T + tau));
    }
    out.push_back(std::move(w));
  }
  return out;
}

Split split_windows(const Dataset& ds, std::size_t T, std::size_t tau, std::size_t n_test,
                    std::size_t train_stride) {
  if (n_test == 0) throw std::invalid_argument("split_windows: need at least one test window");
  if (train_stride == 0) train_stride = tau;
  const std::size_t span = T + tau + (n_test - 1) * tau;
  if (span > ds.length()) {
    throw std::invalid_argument("split_windows: " + std::to_string(n_test) +
                                " test windows do not fit in length " +
                                std::to_string(ds.length()));
  }
  Split split;
  const std::size_t first_start = ds.length() - span;
  split.split_index = first_start + T;
  split.test = make_windows(ds, T, tau, tau);
  split.test.erase(split.test.begin(),
                   split.test.end() - static_cast<std::ptrdiff_t>(n_test));
  for (std::size_t n = 0; n < split.test.size(); ++n) split.test[n].id = n;

  if (split.split_index >= T + tau) {
    Dataset head;
    head.values = Tensor(Shape{ds.dim(), split.split_index});
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      for (std::size_t t = 0; t < split.split_index; ++t) head.values.at(j, t) = ds.values.at(j, t);
    }
    head.item_ids = ds.item_ids;
    if (!ds.timestamps.empty()) {
      head.timestamps.assign(ds.timestamps.begin(),
                             ds.timestamps.begin() + static_cast<std::ptrdiff_t>(split.split_index));
    }
    split.train = make_windows(head, T, tau, train_stride);
  }
  return split;
}

std::string iso_timestamp(std::int64_t seconds_since_epoch) {
  const std::time_t t = static_cast<std::time_t>(seconds_since_epoch);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace tsadv::data
