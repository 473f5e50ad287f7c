#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <string>

namespace lcsim {

/// Base of every error thrown by the library.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;

    /// A retriable error leaves no partial state behind; the caller may try again.
    virtual bool retriable() const noexcept { return false; }
};

class InvalidMatch : public Error
{
  public:
    using Error::Error;
};

class InvalidRequest : public Error
{
  public:
    using Error::Error;
};

class ContractViolation : public Error
{
  public:
    using Error::Error;
};

/// Broken internal bookkeeping (negative delay, clock running backwards, hash collision).
class InternalError : public Error
{
  public:
    using Error::Error;
};

class UndefinedMetric : public Error
{
  public:
    using Error::Error;
};

class NoNodesError : public Error
{
  public:
    NoNodesError() : Error("chord ring has no nodes") {}
};

class ResolutionFailed : public Error
{
  public:
    using Error::Error;
    bool retriable() const noexcept override { return true; }
};

class JoinFailed : public Error
{
  public:
    using Error::Error;
    bool retriable() const noexcept override { return true; }
};

/// Invalid scenario or sweep configuration; names the offending field.
class ConfigError : public Error
{
  public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), m_field(std::move(field))
    {
    }

    const std::string& field() const noexcept { return m_field; }

  private:
    std::string m_field;
};

/// Malformed config file; line is 1-based.
class ParseError : public Error
{
  public:
    ParseError(std::string path, std::size_t line, const std::string& what)
        : Error(path + ":" + std::to_string(line) + ": " + what), m_line(line)
    {
    }

    std::size_t line() const noexcept { return m_line; }

  private:
    std::size_t m_line;
};

class IoError : public Error
{
  public:
    IoError(std::string path, const std::string& what)
        : Error(path + ": " + what), m_path(std::move(path))
    {
    }

    const std::string& path() const noexcept { return m_path; }

  private:
    std::string m_path;
};

} // namespace lcsim
