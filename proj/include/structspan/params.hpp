#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "structspan/autodiff.hpp"
#include "structspan/errors.hpp"
#include "structspan/tensor.hpp"

namespace structspan {

using GradMap = std::map<std::string, Tensor>;

/// Named learnable arrays in declaration order. Names are unique.
class ParamStore {
 public:
  void add(const std::string& name, Tensor value) {
    if (index_.count(name)) throw ContractError("duplicate parameter name: " + name);
    index_.emplace(name, entries_.size());
    entries_.emplace_back(name, std::move(value));
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  Tensor& at(const std::string& name) { return entries_[lookup(name)].second; }
  const Tensor& at(const std::string& name) const { return entries_[lookup(name)].second; }

  /// Registers the named array as a trainable leaf on `tape`.
  Var leaf(Tape& tape, const std::string& name) const { return tape.param(name, at(name)); }

  std::size_t size() const { return entries_.size(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : entries_) n += t.size();
    return n;
  }

  bool operator==(const ParamStore& o) const { return entries_ == o.entries_; }

 private:
  std::size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("unknown parameter: " + name);
    return it->second;
  }

  std::vector<std::pair<std::string, Tensor>> entries_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace structspan
