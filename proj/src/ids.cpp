#include "coldrec/ids.hpp"

#include <algorithm>

namespace coldrec {

IdIndex::IdIndex(std::vector<std::string> ids) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  lookup_.reserve(ids_.size());
  for (std::size_t k = 0; k < ids_.size(); ++k) lookup_.emplace(ids_[k], k);
}

std::optional<std::size_t> IdIndex::find(const std::string& id) const {
  auto it = lookup_.find(id);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t IdIndex::index(const std::string& id) const {
  auto it = lookup_.find(id);
  if (it == lookup_.end()) throw LookupError("unknown id '" + id + "'");
  return it->second;
}

}  // namespace coldrec
