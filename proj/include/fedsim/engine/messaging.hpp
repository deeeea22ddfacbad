#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <variant>

#include "fedsim/core/param_vector.hpp"

namespace fedsim::engine {

using Value = std::variant<std::int64_t, double, std::string, core::ParamVector>;

// Key-value message. Typed reads of a missing key or the wrong alternative
// raise DispatchError.
struct Message {
  std::string mtype;
  std::map<std::string, Value> payload;

  Message() = default;
  explicit Message(std::string type) : mtype(std::move(type)) {}

  Message& set(const std::string& key, Value value);
  bool has(const std::string& key) const { return payload.count(key) != 0; }

  template <class T>
  const T& get(const std::string& key) const;

  bool operator==(const Message&) const = default;
};

using PartyId = std::size_t;
using Handler = std::function<Message(const Message&)>;

class Party {
 public:
  explicit Party(PartyId id) : id_(id) {}

  PartyId id() const { return id_; }
  void register_action(const std::string& mtype, Handler handler);
  bool handles(const std::string& mtype) const { return actions_.count(mtype) != 0; }
  Message handle(const Message& message) const;

 private:
  PartyId id_;
  std::map<std::string, Handler> actions_;
};

// In-process request/response transport. Every call returns the receiver's
// response or raises DispatchError.
class Network {
 public:
  Party& add_party(PartyId id);
  Party& party(PartyId id);
  bool contains(PartyId id) const { return parties_.count(id) != 0; }

  Message communicate(PartyId sender, PartyId receiver, const Message& message) const;
  std::size_t messages_sent() const { return sent_; }

 private:
  std::map<PartyId, std::unique_ptr<Party>> parties_;
  mutable std::size_t sent_ = 0;
};

}  // namespace fedsim::engine
