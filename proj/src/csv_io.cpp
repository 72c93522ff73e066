#include "mscca/csv_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "mscca/errors.hpp"

namespace mscca::io {

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return c;
  throw ShapeError("no column named '" + name + "'");
}

CsvTable parse_csv(std::string_view text) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> lines;
  std::vector<std::string> rec;
  std::string field;
  bool in_quotes = false, quoted = false;
  std::size_t line = 1, rec_line = 1;

  const auto end_field = [&] {
    rec.push_back(std::move(field));
    field.clear();
    quoted = false;
  };
  const auto end_record = [&] {
    const bool blank = rec.size() == 0 && field.empty() && !quoted;
    if (!blank) {
      end_field();
      records.push_back(std::move(rec));
      lines.push_back(rec_line);
    }
    rec.clear();
    field.clear();
    quoted = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"') {
      if (!field.empty() || quoted) throw ShapeError("line " + std::to_string(line) + ": stray quote");
      in_quotes = quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
      rec_line = ++line;
    } else {
      if (quoted) throw ShapeError("line " + std::to_string(line) + ": text after a closing quote");
      field += c;
    }
  }
  if (in_quotes) throw ShapeError("unterminated quoted field");
  end_record();

  if (records.empty()) throw ShapeError("input has no header row");
  CsvTable out;
  out.header = std::move(records.front());
  std::set<std::string> seen;
  for (const auto& name : out.header) {
    if (name.empty()) throw ShapeError("empty column name in header");
    if (!seen.insert(name).second) throw ShapeError("duplicate column name '" + name + "'");
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != out.header.size())
      throw ShapeError("line " + std::to_string(lines[r]) + ": expected " + std::to_string(out.header.size()) +
                       " fields, found " + std::to_string(records[r].size()));
    for (std::size_t c = 0; c < records[r].size(); ++c)
      if (records[r][c].empty())
        throw MissingValueError("line " + std::to_string(lines[r]) + ": empty value in column '" + out.header[c] +
                                "'");
    out.rows.push_back(std::move(records[r]));
  }
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading " + path.string());
  return ss.str();
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_text(path)); }

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t c = 0; c < fields.size(); ++c) {
    if (c) out += ',';
    out += csv_field(fields[c]);
  }
  return out + '\n';
}

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

void write_atomic(const std::filesystem::path& path, std::string_view contents) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      throw IoError("error while writing " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

}  // namespace mscca::io
