#pragma once

// CSV output helpers. Dialect: comma separated, '.' decimal point,
// 17 significant digits for reals (lossless for IEEE double),
// '#'-prefixed comment lines.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>

namespace superexp {

inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

class CsvWriter {
 public:
  // Empty path writes to stdout.
  explicit CsvWriter(const std::string& path) {
    if (path.empty()) {
      out_ = &std::cout;
    } else {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw std::runtime_error("cannot open output file: " + path);
      out_ = file_.get();
    }
  }

  void comment(const std::string& line) { *out_ << "# " << line << "\n"; }

  void field(const std::string& s) {
    if (!first_) *out_ << ',';
    *out_ << s;
    first_ = false;
  }
  void field(double x) { field(format_real(x)); }
  void field(std::int64_t v) { field(std::to_string(v)); }
  void field(int v) { field(std::int64_t{v}); }
  void field(std::uint64_t v) { field(std::to_string(v)); }

  void end_row() {
    *out_ << "\n";
    first_ = true;
  }

  template <class... Ts>
  void row(const Ts&... vals) {
    (field(vals), ...);
    end_row();
  }

  void flush() { out_->flush(); }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_ = nullptr;
  bool first_ = true;
};

}  // namespace superexp
