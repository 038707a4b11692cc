#pragma once

#include <stdexcept>
#include <string>

namespace dpmarket {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind {
  kValidation = 2,
  kRefused = 3,
  kIntegrity = 4,
};

class MarketError : public std::runtime_error {
 public:
  MarketError(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

// Malformed input: dimension mismatch, bad index, parameter out of range.
class ValidationError : public MarketError {
 public:
  explicit ValidationError(const std::string& what)
      : MarketError(ErrorKind::kValidation, what) {}
};

class RefusedPurchase : public MarketError {
 public:
  explicit RefusedPurchase(const std::string& what)
      : MarketError(ErrorKind::kRefused, what) {}
};

class IntegrityError : public MarketError {
 public:
  IntegrityError(long long entry, const std::string& what)
      : MarketError(ErrorKind::kIntegrity,
                    "ledger entry " + std::to_string(entry) + ": " + what),
        entry_(entry) {}

  // Sequence number of the failing entry, or -1 when the ledger as a whole is
  // unreadable.
  long long entry() const noexcept { return entry_; }

 private:
  long long entry_;
};

}  // namespace dpmarket
