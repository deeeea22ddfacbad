#include "fedsim/engine/messaging.hpp"

#include "fedsim/error.hpp"

namespace fedsim::engine {

Message& Message::set(const std::string& key, Value value) {
  payload[key] = std::move(value);
  return *this;
}

namespace {
template <class T>
constexpr const char* type_name() {
  if constexpr (std::is_same_v<T, std::int64_t>) return "integer";
  if constexpr (std::is_same_v<T, double>) return "real";
  if constexpr (std::is_same_v<T, std::string>) return "string";
  return "params";
}
}  // namespace

template <class T>
const T& Message::get(const std::string& key) const {
  auto it = payload.find(key);
  if (it == payload.end()) {
    throw DispatchError("message '" + mtype + "' has no key '" + key + "'");
  }
  const T* v = std::get_if<T>(&it->second);
  if (v == nullptr) {
    throw DispatchError("message '" + mtype + "' key '" + key + "' is not a " + type_name<T>());
  }
  return *v;
}

template const std::int64_t& Message::get<std::int64_t>(const std::string&) const;
template const double& Message::get<double>(const std::string&) const;
template const std::string& Message::get<std::string>(const std::string&) const;
template const core::ParamVector& Message::get<core::ParamVector>(const std::string&) const;

void Party::register_action(const std::string& mtype, Handler handler) {
  if (mtype.empty()) throw ConfigError("message type must be non-empty");
  actions_[mtype] = std::move(handler);
}

Message Party::handle(const Message& message) const {
  auto it = actions_.find(message.mtype);
  if (it == actions_.end()) {
    throw DispatchError("party " + std::to_string(id_) + " has no action for message type '" +
                        message.mtype + "'");
  }
  return it->second(message);
}

Party& Network::add_party(PartyId id) {
  auto [it, inserted] = parties_.emplace(id, std::make_unique<Party>(id));
  if (!inserted) throw ConfigError("party " + std::to_string(id) + " already exists");
  return *it->second;
}

Party& Network::party(PartyId id) {
  auto it = parties_.find(id);
  if (it == parties_.end()) throw DispatchError("unknown party " + std::to_string(id));
  return *it->second;
}

Message Network::communicate(PartyId sender, PartyId receiver, const Message& message) const {
  if (message.mtype.empty()) throw DispatchError("message type must be non-empty");
  if (parties_.count(sender) == 0) throw DispatchError("unknown sender " + std::to_string(sender));
  auto it = parties_.find(receiver);
  if (it == parties_.end()) throw DispatchError("unknown receiver " + std::to_string(receiver));
  ++sent_;
  return it->second->handle(message);
}

}  // namespace fedsim::engine
