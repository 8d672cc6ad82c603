#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ftlab/error.hpp"
#include "ftlab/tensor.hpp"

namespace ftlab {

// Ordered map of named parameter tensors. Iteration order is insertion
// order, which makes every walk over a store deterministic; two stores built
// from the same architecture config have identical name sets.
template <typename T>
class ParamStore {
 public:
  void add(const std::string& name, Tensor<T> tensor) {
    require(index_.count(name) == 0, "param store: duplicate name '" + name + "'");
    index_[name] = items_.size();
    items_.emplace_back(name, std::move(tensor));
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  Tensor<T>& at(const std::string& name) {
    auto it = index_.find(name);
    require(it != index_.end(), "param store: unknown name '" + name + "'");
    return items_[it->second].second;
  }
  const Tensor<T>& at(const std::string& name) const {
    auto it = index_.find(name);
    require(it != index_.end(), "param store: unknown name '" + name + "'");
    return items_[it->second].second;
  }

  std::size_t size() const { return items_.size(); }
  const std::pair<std::string, Tensor<T>>& item(std::size_t i) const { return items_[i]; }
  std::pair<std::string, Tensor<T>>& item(std::size_t i) { return items_[i]; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(items_.size());
    for (const auto& [n, t] : items_) out.push_back(n);
    return out;
  }

  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const auto& [name, t] : items_) n += t.numel();
    return n;
  }

  bool same_layout(const ParamStore& other) const {
    if (items_.size() != other.items_.size()) return false;
    for (std::size_t i = 0; i < items_.size(); ++i)
      if (items_[i].first != other.items_[i].first || items_[i].second.shape != other.items_[i].second.shape)
        return false;
    return true;
  }

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& [name, t] : items_) out.add(name, t.template cast<U>());
    return out;
  }

  // Store of same-layout zero tensors.
  ParamStore zeros_like() const {
    ParamStore out;
    for (const auto& [name, t] : items_) out.add(name, Tensor<T>(t.shape));
    return out;
  }

  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::vector<std::pair<std::string, Tensor<T>>> items_;
  std::map<std::string, std::size_t> index_;
};

// a - b, elementwise over matching layouts.
template <typename T>
ParamStore<T> subtract(const ParamStore<T>& a, const ParamStore<T>& b) {
  require(a.same_layout(b), "param store subtract: layouts differ");
  ParamStore<T> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& [name, ta] = a.item(i);
    const auto& tb = b.item(i).second;
    Tensor<T> t(ta.shape);
    for (std::size_t j = 0; j < t.numel(); ++j) t.data[j] = ta.data[j] - tb.data[j];
    out.add(name, std::move(t));
  }
  return out;
}

// base + ca*d1 + cb*d2, the landscape combination.
template <typename T>
ParamStore<T> combine(const ParamStore<T>& base, double ca, const ParamStore<T>& d1, double cb,
                      const ParamStore<T>& d2) {
  require(base.same_layout(d1) && base.same_layout(d2), "param store combine: layouts differ");
  ParamStore<T> out;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const auto& [name, tb] = base.item(i);
    const auto& t1 = d1.item(i).second;
    const auto& t2 = d2.item(i).second;
    Tensor<T> t(tb.shape);
    for (std::size_t j = 0; j < t.numel(); ++j)
      t.data[j] = static_cast<T>(static_cast<double>(tb.data[j]) + ca * static_cast<double>(t1.data[j]) +
                                 cb * static_cast<double>(t2.data[j]));
    out.add(name, std::move(t));
  }
  return out;
}

// Global L2 norm over every entry of every tensor, accumulated in double.
template <typename T>
double global_l2_norm(const ParamStore<T>& store) {
  double acc = 0.0;
  for (const auto& [name, t] : store)
    for (const T& v : t.data) acc += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(acc);
}

template <typename T>
bool all_finite(const ParamStore<T>& store) {
  for (const auto& [name, t] : store)
    if (!t.all_finite()) return false;
  return true;
}

template <typename T>
bool bitwise_equal(const ParamStore<T>& a, const ParamStore<T>& b) {
  if (!a.same_layout(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& ta = a.item(i).second.data;
    const auto& tb = b.item(i).second.data;
    for (std::size_t j = 0; j < ta.size(); ++j)
      if (!(ta[j] == tb[j])) return false;
  }
  return true;
}

// FNV-1a over names, shapes, and raw element bytes; stable content identity
// for manifests.
template <typename T>
std::uint64_t content_hash(const ParamStore<T>& store) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix_bytes = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ull;
    }
  };
  for (const auto& [name, t] : store) {
    mix_bytes(name.data(), name.size());
    for (std::size_t d : t.shape) mix_bytes(&d, sizeof(d));
    mix_bytes(t.data.data(), t.data.size() * sizeof(T));
  }
  return h;
}

}  // namespace ftlab
