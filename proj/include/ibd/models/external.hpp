#pragma once

#include "ibd/errors.hpp"
#include "ibd/model.hpp"
#include "ibd/types.hpp"

#include <chrono>
#include <span>
#include <string>

namespace ibd {

struct ExternalModelConfig {
    // Shell command launched (via /bin/sh -c) once per batch exchange.
    std::string command;
    // Rows per exchange; larger batches are chunked.
    std::size_t batch_size = 100000;
    // Time allowed to spawn the child and deliver the request.
    std::chrono::milliseconds startup_timeout{10000};
    // Time allowed from end of request to a complete response.
    std::chrono::milliseconds response_timeout{30000};
};

class ExternalModelError final : public ModelError {
public:
    enum class Kind { ProcessFailure, ShortResponse, MalformedResponse, Timeout };

    ExternalModelError(Kind kind, const std::string& msg) : ModelError(msg), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// Bridge to an arbitrary scoring process. Each batch is one request-response
// exchange: the rows are written to the child's stdin as CSV (header line,
// LF endings, categorical cells as their level labels), stdin is closed,
// and the child must answer with exactly one decimal score per row on
// stdout. Stateless by design, so concurrent scoring just runs concurrent
// children.
class ExternalModel final : public Model {
public:
    ExternalModel(ExternalModelConfig config, Schema schema);

    void score(const Table& rows, std::span<double> out) const override;
    std::string family() const override { return "external"; }
    std::string name() const override { return "external(" + config_.command + ")"; }
    const Schema* schema() const override { return &schema_; }

    const ExternalModelConfig& config() const { return config_; }

private:
    void score_chunk(const Table& rows, std::size_t begin, std::size_t end,
                     std::span<double> out) const;

    ExternalModelConfig config_;
    Schema schema_;
};

ModelPtr external_model(ExternalModelConfig config, Schema schema);

} // namespace ibd
