#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "knobtuner/errors.hpp"
#include "knobtuner/random.hpp"

namespace knobtuner {

/// One tunable dimension: a name and its strictly increasing integer settings.
struct KnobDef {
  std::string name;
  std::vector<std::int64_t> values;

  std::size_t cardinality() const noexcept { return values.size(); }
  bool operator==(const KnobDef&) const = default;
};

/// One index per knob.
struct Configuration {
  std::vector<std::size_t> indices;

  std::size_t size() const noexcept { return indices.size(); }
  std::size_t operator[](std::size_t i) const { return indices[i]; }
  auto operator<=>(const Configuration&) const = default;
};

/// One direction in {-1, 0, +1} per knob.
struct Action {
  std::vector<int> directions;

  bool is_stay() const noexcept {
    return std::all_of(directions.begin(), directions.end(),
                       [](int d) { return d == 0; });
  }
  bool operator==(const Action&) const = default;
};

struct ConfigurationHash {
  std::size_t operator()(const Configuration& c) const noexcept {
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    for (std::size_t i : c.indices) h = splitmix64(h ^ static_cast<std::uint64_t>(i));
    return static_cast<std::size_t>(h);
  }
};

class DesignSpace {
 public:
  /// Validates all invariants; throws ValidationError naming the offending knob.
  DesignSpace(std::string name, std::vector<KnobDef> knobs)
      : name_(std::move(name)), knobs_(std::move(knobs)) {
    if (knobs_.empty()) throw ValidationError("design space has no knobs");
    std::set<std::string> seen;
    for (const auto& knob : knobs_) {
      if (knob.name.empty()) throw ValidationError("knob with empty name");
      if (!seen.insert(knob.name).second)
        throw ValidationError("knob '" + knob.name + "': duplicate name");
      if (knob.values.empty())
        throw ValidationError("knob '" + knob.name + "': empty value list");
      for (std::size_t i = 1; i < knob.values.size(); ++i)
        if (knob.values[i] <= knob.values[i - 1])
          throw ValidationError("knob '" + knob.name +
                                "': values not strictly increasing");
    }
  }

  const std::string& name() const noexcept { return name_; }
  const std::vector<KnobDef>& knobs() const noexcept { return knobs_; }
  std::size_t num_knobs() const noexcept { return knobs_.size(); }
  std::size_t cardinality(std::size_t knob) const { return knobs_[knob].cardinality(); }

  std::vector<std::size_t> cardinalities() const {
    std::vector<std::size_t> out;
    out.reserve(knobs_.size());
    for (const auto& k : knobs_) out.push_back(k.cardinality());
    return out;
  }

  /// Product of cardinalities, saturating at UINT64_MAX.
  std::uint64_t total_cardinality() const noexcept {
    std::uint64_t total = 1;
    for (const auto& k : knobs_) {
      const std::uint64_t c = k.cardinality();
      if (total > std::numeric_limits<std::uint64_t>::max() / c)
        return std::numeric_limits<std::uint64_t>::max();
      total *= c;
    }
    return total;
  }

  bool contains(const Configuration& config) const noexcept {
    if (config.size() != knobs_.size()) return false;
    for (std::size_t i = 0; i < knobs_.size(); ++i)
      if (config[i] >= knobs_[i].cardinality()) return false;
    return true;
  }

  void check(const Configuration& config) const {
    if (config.size() != knobs_.size())
      throw DimensionMismatch("configuration has " + std::to_string(config.size()) +
                              " indices, space '" + name_ + "' has " +
                              std::to_string(knobs_.size()) + " knobs");
    for (std::size_t i = 0; i < knobs_.size(); ++i)
      if (config[i] >= knobs_[i].cardinality())
        throw DimensionMismatch("knob '" + knobs_[i].name + "': index " +
                                std::to_string(config[i]) + " out of range");
  }

  /// Actual knob settings selected by a configuration.
  std::vector<std::int64_t> values_of(const Configuration& config) const {
    check(config);
    std::vector<std::int64_t> out(knobs_.size());
    for (std::size_t i = 0; i < knobs_.size(); ++i) out[i] = knobs_[i].values[config[i]];
    return out;
  }

  /// Inverse of values_of; throws ValidationError for values outside the space.
  Configuration config_of(const std::vector<std::int64_t>& values) const {
    if (values.size() != knobs_.size())
      throw DimensionMismatch("value vector length does not match knob count");
    Configuration c;
    c.indices.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto& v = knobs_[i].values;
      auto it = std::lower_bound(v.begin(), v.end(), values[i]);
      if (it == v.end() || *it != values[i])
        throw ValidationError("knob '" + knobs_[i].name + "': value " +
                              std::to_string(values[i]) + " not in space");
      c.indices[i] = static_cast<std::size_t>(it - v.begin());
    }
    return c;
  }

  Configuration random_config(Rng& rng) const {
    Configuration c;
    c.indices.resize(knobs_.size());
    for (std::size_t i = 0; i < knobs_.size(); ++i) c.indices[i] = rng.below(knobs_[i].cardinality());
    return c;
  }

  bool operator==(const DesignSpace&) const = default;

 private:
  std::string name_;
  std::vector<KnobDef> knobs_;
};

inline nlohmann::ordered_json to_json(const DesignSpace& space) {
  nlohmann::ordered_json doc;
  doc["name"] = space.name();
  doc["knobs"] = nlohmann::ordered_json::array();
  for (const auto& k : space.knobs()) doc["knobs"].push_back({{"name", k.name}, {"values", k.values}});
  return doc;
}

inline DesignSpace space_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("space document must be a JSON object");
  if (!doc.contains("name") || !doc["name"].is_string())
    throw ParseError("space document: missing string field 'name'");
  if (!doc.contains("knobs") || !doc["knobs"].is_array())
    throw ParseError("space document: missing array field 'knobs'");
  std::vector<KnobDef> knobs;
  std::size_t position = 0;
  for (const auto& entry : doc["knobs"]) {
    const std::string where = "knob #" + std::to_string(position++);
    if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string())
      throw ParseError(where + ": missing string field 'name'");
    const std::string name = entry["name"].get<std::string>();
    if (!entry.contains("values") || !entry["values"].is_array())
      throw ParseError("knob '" + name + "': missing array field 'values'");
    KnobDef knob{name, {}};
    for (const auto& v : entry["values"]) {
      if (!v.is_number_integer())
        throw ParseError("knob '" + name + "': values must be integers");
      knob.values.push_back(v.get<std::int64_t>());
    }
    knobs.push_back(std::move(knob));
  }
  return DesignSpace(doc["name"].get<std::string>(), std::move(knobs));
}

/// Parses and validates a space document (JSON text).
inline DesignSpace load_space(std::string_view document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("space document: ") + e.what());
  }
  return space_from_json(doc);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline DesignSpace load_space_file(const std::string& path) {
  return load_space(read_text_file(path));
}

// Per-dimension clamp(index + direction, 0, cardinality - 1).
inline Configuration apply_action(const DesignSpace& space, const Configuration& config,
                                  const Action& action) {
  space.check(config);
  if (action.directions.size() != space.num_knobs())
    throw DimensionMismatch("action has " + std::to_string(action.directions.size()) +
                            " directions, space has " + std::to_string(space.num_knobs()) +
                            " knobs");
  Configuration out = config;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int d = action.directions[i];
    if (d < -1 || d > 1) throw InvalidArgument("action direction outside {-1, 0, +1}");
    if (d < 0 && out.indices[i] > 0) --out.indices[i];
    if (d > 0 && out.indices[i] + 1 < space.cardinality(i)) ++out.indices[i];
  }
  return out;
}

/// index_i / max(1, cardinality_i - 1): every entry lies in [0, 1].
inline std::vector<double> encode_state(const DesignSpace& space, const Configuration& config) {
  space.check(config);
  std::vector<double> state(config.size());
  for (std::size_t i = 0; i < config.size(); ++i) {
    const std::size_t span = std::max<std::size_t>(1, space.cardinality(i) - 1);
    state[i] = static_cast<double>(config[i]) / static_cast<double>(span);
  }
  return state;
}

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

/// Lexicographic walk over every configuration of a space (last knob fastest).
class ConfigurationRange {
 public:
  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Configuration;
    using difference_type = std::ptrdiff_t;
    using pointer = const Configuration*;
    using reference = const Configuration&;

    iterator() = default;
    iterator(const std::vector<std::size_t>* cards, bool done) : cards_(cards), done_(done) {
      if (!done_) current_.indices.assign(cards_->size(), 0);
    }

    reference operator*() const { return current_; }
    pointer operator->() const { return &current_; }

    iterator& operator++() {
      std::size_t i = current_.size();
      while (i > 0) {
        --i;
        if (++current_.indices[i] < (*cards_)[i]) return *this;
        current_.indices[i] = 0;
      }
      done_ = true;
      return *this;
    }
    void operator++(int) { ++*this; }

    bool operator==(const iterator& other) const {
      if (done_ || other.done_) return done_ == other.done_;
      return current_ == other.current_;
    }

   private:
    const std::vector<std::size_t>* cards_ = nullptr;
    bool done_ = true;
    Configuration current_;
  };

  explicit ConfigurationRange(std::vector<std::size_t> cardinalities)
      : cards_(std::move(cardinalities)) {}

  iterator begin() const { return iterator(&cards_, false); }
  iterator end() const { return iterator(&cards_, true); }

 private:
  std::vector<std::size_t> cards_;
};

/// Throws CapExceeded when the space has more than `cap` configurations.
inline ConfigurationRange enumerate_space(const DesignSpace& space,
                                          std::uint64_t cap = kDefaultEnumerationCap) {
  const std::uint64_t total = space.total_cardinality();
  if (total > cap)
    throw CapExceeded("space '" + space.name() + "' has " +
                      (total == std::numeric_limits<std::uint64_t>::max()
                           ? std::string("more than 2^64")
                           : std::to_string(total)) +
                      " configurations, enumeration cap is " + std::to_string(cap));
  return ConfigurationRange(space.cardinalities());
}

}  // namespace knobtuner
