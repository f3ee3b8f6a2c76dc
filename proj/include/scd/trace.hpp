#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "scd/errors.hpp"
#include "scd/types.hpp"

namespace scd {

enum class TraceLabel : std::uint8_t { Benign, DirectAttack, IndirectAttack };

inline const char* to_string(TraceLabel l) {
  switch (l) {
    case TraceLabel::Benign: return "benign";
    case TraceLabel::DirectAttack: return "direct_attack";
    case TraceLabel::IndirectAttack: return "indirect_attack";
  }
  return "?";
}

inline TraceLabel parse_label(const std::string& s) {
  if (s == "benign") return TraceLabel::Benign;
  if (s == "direct_attack") return TraceLabel::DirectAttack;
  if (s == "indirect_attack") return TraceLabel::IndirectAttack;
  throw ParseError("unknown trace label '" + s + "'");
}

struct DeltaRecord {
  std::uint32_t tid = 0;
  EventWindowSample delta;
  bool operator==(const DeltaRecord&) const = default;
};

struct ForkRecord {
  std::uint32_t parent_tid = 0;
  std::uint32_t child_tid = 0;
  bool operator==(const ForkRecord&) const = default;
};

struct ExitRecord {
  std::uint32_t tid = 0;
  bool operator==(const ExitRecord&) const = default;
};

using TraceRecord = std::variant<DeltaRecord, ForkRecord, ExitRecord>;

// A generated or replayed workload: per-thread event deltas in emission
// order plus fork/exit lifecycle records.
struct Trace {
  TraceLabel label = TraceLabel::Benign;
  std::vector<TraceRecord> records;

  bool operator==(const Trace&) const = default;
};

inline constexpr const char* kTraceMagic = "scdtrace v1";

// Plain-text `scdtrace v1` format: version header, LABEL line, then one CSV
// record per delta (tid,cycles,l1m,l2m,llcm,l2wb,l2li,tlbm) and lifecycle
// lines FORK,parent,child / EXIT,tid.
inline void write_trace(const Trace& t, std::ostream& out) {
  out << kTraceMagic << '\n';
  out << "LABEL," << to_string(t.label) << '\n';
  for (const auto& rec : t.records) {
    if (const auto* d = std::get_if<DeltaRecord>(&rec)) {
      const auto& s = d->delta;
      out << d->tid << ',' << s.elapsed_cycles << ',' << s.l1_miss << ',' << s.l2_miss << ','
          << s.llc_miss << ',' << s.l2_write_back << ',' << s.l2_lines_in << ',' << s.tlb_miss_l2
          << '\n';
    } else if (const auto* f = std::get_if<ForkRecord>(&rec)) {
      out << "FORK," << f->parent_tid << ',' << f->child_tid << '\n';
    } else {
      out << "EXIT," << std::get<ExitRecord>(rec).tid << '\n';
    }
  }
}

inline void write_trace(const Trace& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open for writing");
  write_trace(t, out);
  if (!out) throw ParseError(path + ": write failed");
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::uint64_t parse_u64(const std::string& field, const std::string& where) {
  if (field.empty()) throw ParseError(where + ": empty numeric field");
  std::uint64_t v = 0;
  for (char c : field) {
    if (c < '0' || c > '9') throw ParseError(where + ": bad numeric field '" + field + "'");
    const std::uint64_t nv = v * 10 + (c - '0');
    if (nv < v) throw ParseError(where + ": numeric field overflow '" + field + "'");
    v = nv;
  }
  return v;
}

inline std::uint32_t parse_tid(const std::string& field, const std::string& where) {
  const std::uint64_t v = parse_u64(field, where);
  if (v > 0xffffffffull) throw ParseError(where + ": tid out of range '" + field + "'");
  return static_cast<std::uint32_t>(v);
}

}  // namespace detail

inline Trace read_trace(std::istream& in, const std::string& name = "<stream>") {
  std::string line;
  std::size_t lineno = 1;
  const auto where = [&] { return name + ":" + std::to_string(lineno); };

  if (!std::getline(in, line)) throw ParseError(name + ": empty file, missing header");
  if (line != kTraceMagic) {
    if (line.rfind("scdtrace ", 0) == 0) {
      throw ParseError(where() + ": unsupported trace version '" + line + "' (expected '" +
                       kTraceMagic + "')");
    }
    throw ParseError(where() + ": not a trace file (missing '" + std::string(kTraceMagic) + "')");
  }

  ++lineno;
  if (!std::getline(in, line)) throw ParseError(name + ": truncated file, missing LABEL record");
  auto fields = detail::split_csv(line);
  if (fields.size() != 2 || fields[0] != "LABEL") {
    throw ParseError(where() + ": expected LABEL record, got '" + line + "'");
  }
  Trace t;
  try {
    t.label = parse_label(fields[1]);
  } catch (const ParseError& e) {
    throw ParseError(where() + ": " + e.what());
  }

  while (++lineno, std::getline(in, line)) {
    if (line.empty()) continue;
    fields = detail::split_csv(line);
    if (fields[0] == "FORK") {
      if (fields.size() != 3) throw ParseError(where() + ": FORK record needs 2 fields, got '" + line + "'");
      t.records.push_back(ForkRecord{detail::parse_tid(fields[1], where()),
                                     detail::parse_tid(fields[2], where())});
    } else if (fields[0] == "EXIT") {
      if (fields.size() != 2) throw ParseError(where() + ": EXIT record needs 1 field, got '" + line + "'");
      t.records.push_back(ExitRecord{detail::parse_tid(fields[1], where())});
    } else {
      if (fields.size() != 8) {
        throw ParseError(where() + ": delta record needs 8 fields, got " +
                         std::to_string(fields.size()) + " in '" + line + "'");
      }
      DeltaRecord d;
      d.tid = detail::parse_tid(fields[0], where());
      d.delta.elapsed_cycles = detail::parse_u64(fields[1], where());
      d.delta.l1_miss = detail::parse_u64(fields[2], where());
      d.delta.l2_miss = detail::parse_u64(fields[3], where());
      d.delta.llc_miss = detail::parse_u64(fields[4], where());
      d.delta.l2_write_back = detail::parse_u64(fields[5], where());
      d.delta.l2_lines_in = detail::parse_u64(fields[6], where());
      d.delta.tlb_miss_l2 = detail::parse_u64(fields[7], where());
      t.records.push_back(d);
    }
  }
  return t;
}

inline Trace read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  return read_trace(in, path);
}

// Semantic checks: strictly positive cycle deltas and well-nested
// fork/exit lifecycles (no activity before FORK or after EXIT, each tid
// forked at most once).
inline ValidationResult validate_trace(const Trace& t) {
  std::set<std::uint32_t> started;  // tids with any activity seen
  std::set<std::uint32_t> forked;   // tids created by a FORK record
  std::set<std::uint32_t> exited;
  std::size_t idx = 0;
  for (const auto& rec : t.records) {
    ++idx;
    const auto at = [&](const std::string& what) {
      return "record " + std::to_string(idx) + ": " + what;
    };
    if (const auto* d = std::get_if<DeltaRecord>(&rec)) {
      if (d->delta.elapsed_cycles == 0) {
        return ValidationResult::fail(at("delta with zero cycles for tid " + std::to_string(d->tid)));
      }
      if (exited.count(d->tid)) {
        return ValidationResult::fail(at("activity after EXIT for tid " + std::to_string(d->tid)));
      }
      started.insert(d->tid);
    } else if (const auto* f = std::get_if<ForkRecord>(&rec)) {
      if (f->parent_tid == f->child_tid) {
        return ValidationResult::fail(at("fork with parent == child"));
      }
      if (exited.count(f->parent_tid)) {
        return ValidationResult::fail(at("fork by exited tid " + std::to_string(f->parent_tid)));
      }
      if (started.count(f->child_tid) || forked.count(f->child_tid)) {
        return ValidationResult::fail(at("child tid " + std::to_string(f->child_tid) +
                                         " already existed at FORK"));
      }
      started.insert(f->parent_tid);
      forked.insert(f->child_tid);
      started.insert(f->child_tid);
    } else {
      const auto tid = std::get<ExitRecord>(rec).tid;
      if (exited.count(tid)) {
        return ValidationResult::fail(at("double EXIT for tid " + std::to_string(tid)));
      }
      started.insert(tid);
      exited.insert(tid);
    }
  }
  return ValidationResult::pass();
}

// Root threads: everything not created by a FORK record, in order of first
// appearance.
inline std::vector<std::uint32_t> root_tids(const Trace& t) {
  std::set<std::uint32_t> forked;
  std::vector<std::uint32_t> roots;
  std::set<std::uint32_t> seen;
  for (const auto& rec : t.records) {
    if (const auto* f = std::get_if<ForkRecord>(&rec)) forked.insert(f->child_tid);
  }
  for (const auto& rec : t.records) {
    std::uint32_t tid;
    if (const auto* d = std::get_if<DeltaRecord>(&rec)) {
      tid = d->tid;
    } else if (const auto* f = std::get_if<ForkRecord>(&rec)) {
      tid = f->parent_tid;
    } else {
      tid = std::get<ExitRecord>(rec).tid;
    }
    if (!forked.count(tid) && seen.insert(tid).second) roots.push_back(tid);
  }
  return roots;
}

}  // namespace scd
