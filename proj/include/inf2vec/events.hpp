#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "inf2vec/core.hpp"
#include "inf2vec/rng.hpp"

namespace inf2vec {

struct Event {
  int type_id = 0;
  double time = 0.0;
};

struct EventSequence {
  std::string seq_id;
  std::vector<Event> events;  // strictly increasing times, all <= horizon
  double horizon = 0.0;
};

enum class SplitTag { train, valid, test, unsplit };

inline std::string to_string(SplitTag t) {
  switch (t) {
    case SplitTag::train: return "train";
    case SplitTag::valid: return "valid";
    case SplitTag::test: return "test";
    default: return "unsplit";
  }
}

struct Dataset {
  int num_types = 0;
  std::vector<EventSequence> sequences;
  SplitTag split_tag = SplitTag::unsplit;

  size_t total_events() const {
    size_t n = 0;
    for (const auto& s : sequences) n += s.events.size();
    return n;
  }
  double total_time() const {
    double t = 0.0;
    for (const auto& s : sequences) t += s.horizon;
    return t;
  }
};

struct SplitSpec {
  std::array<double, 3> ratios{0.6, 0.2, 0.2};
  uint64_t seed = 0;
};

inline void validate_split_spec(const SplitSpec& spec) {
  double sum = 0.0;
  for (double r : spec.ratios) {
    require(r > 0.0 && r < 1.0, cat("split ratio ", r, " must lie in (0, 1)"));
    sum += r;
  }
  require(std::fabs(sum - 1.0) <= 1e-9, cat("split ratios must sum to 1, got ", sum));
}

inline void validate_sequence(const EventSequence& seq, int num_types) {
  double prev = -1.0;
  for (size_t i = 0; i < seq.events.size(); ++i) {
    const Event& e = seq.events[i];
    require(e.type_id >= 0 && e.type_id < num_types,
            cat("event type ", e.type_id, " out of range [0, ", num_types,
                ") at seq ", seq.seq_id, ", index ", i));
    require(std::isfinite(e.time) && e.time >= 0.0,
            cat("event time must be finite and non-negative at seq ", seq.seq_id,
                ", index ", i));
    require(i == 0 || e.time > prev,
            cat("non-increasing timestamps at seq ", seq.seq_id, ", index ", i));
    require(e.time <= seq.horizon,
            cat("event time ", e.time, " exceeds horizon ", seq.horizon, " at seq ",
                seq.seq_id, ", index ", i));
    prev = e.time;
  }
}

inline void validate_dataset(const Dataset& data) {
  std::vector<std::string> ids;
  for (const auto& s : data.sequences) ids.push_back(s.seq_id);
  std::sort(ids.begin(), ids.end());
  for (size_t i = 1; i < ids.size(); ++i)
    require(ids[i] != ids[i - 1], cat("duplicate sequence id '", ids[i], "'"));
  for (const auto& s : data.sequences) validate_sequence(s, data.num_types);
}

// One sequence per line: {"seq_id": ..., "horizon": ..., "events": [{"t", "k"}]}
inline Dataset load_jsonl(const std::string& path, int num_types) {
  require(num_types > 0, "load_jsonl: num_types must be positive");
  std::ifstream in(path);
  require(in.good(), cat("cannot open dataset file '", path, "'"));
  Dataset data;
  data.num_types = num_types;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw error(cat("parse error at ", path, ":", line_no, ": ", e.what()));
    }
    EventSequence seq;
    try {
      seq.seq_id = j.at("seq_id").get<std::string>();
      seq.horizon = j.at("horizon").get<double>();
      for (const auto& ev : j.at("events"))
        seq.events.push_back(Event{ev.at("k").get<int>(), ev.at("t").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw error(cat("bad sequence record at ", path, ":", line_no, ": ", e.what()));
    }
    validate_sequence(seq, num_types);
    data.sequences.push_back(std::move(seq));
  }
  validate_dataset(data);
  return data;
}

inline void save_jsonl(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), cat("cannot write dataset file '", path, "'"));
  for (const auto& s : data.sequences) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : s.events) events.push_back({{"k", e.type_id}, {"t", e.time}});
    nlohmann::json j{{"seq_id", s.seq_id}, {"horizon", s.horizon}, {"events", events}};
    out << j.dump() << "\n";
  }
  require(out.good(), cat("write failed for '", path, "'"));
}

inline void save_meta(int num_types, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), cat("cannot write meta file '", path, "'"));
  out << nlohmann::json{{"num_types", num_types}}.dump() << "\n";
}

inline int load_meta(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), cat("cannot open meta file '", path, "'"));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw error(cat("bad meta file '", path, "': ", e.what()));
  }
  require(j.contains("num_types"), cat("meta file '", path, "' missing num_types"));
  int k = j.at("num_types").get<int>();
  require(k > 0, "num_types must be positive");
  return k;
}

// Shuffles whole sequences with a seeded permutation, then cuts by
// floor(N*r1) / floor(N*r2) / remainder.
inline std::tuple<Dataset, Dataset, Dataset> split_dataset(const Dataset& data,
                                                           const SplitSpec& spec) {
  validate_split_spec(spec);
  int n = static_cast<int>(data.sequences.size());
  require(n >= 3, cat("split needs at least 3 sequences, got ", n));
  Rng rng(spec.seed);
  std::vector<int> perm = rng.permutation(n);
  int n_train = static_cast<int>(std::floor(n * spec.ratios[0]));
  int n_valid = static_cast<int>(std::floor(n * spec.ratios[1]));
  Dataset train{data.num_types, {}, SplitTag::train};
  Dataset valid{data.num_types, {}, SplitTag::valid};
  Dataset test{data.num_types, {}, SplitTag::test};
  for (int i = 0; i < n; ++i) {
    const EventSequence& s = data.sequences[static_cast<size_t>(perm[i])];
    if (i < n_train)
      train.sequences.push_back(s);
    else if (i < n_train + n_valid)
      valid.sequences.push_back(s);
    else
      test.sequences.push_back(s);
  }
  return {std::move(train), std::move(valid), std::move(test)};
}

// Gaps between consecutive events; the first gap is measured from time 0.
inline std::vector<double> inter_arrivals(const EventSequence& seq) {
  std::vector<double> gaps;
  gaps.reserve(seq.events.size());
  double prev = 0.0;
  for (const Event& e : seq.events) {
    gaps.push_back(e.time - prev);
    prev = e.time;
  }
  return gaps;
}

}  // namespace inf2vec
