#pragma once

#include <functional>
#include <string>
#include <vector>

#include "drumscribe/errors.hpp"
#include "drumscribe/tensor.hpp"

namespace drumscribe {

/// Reverse-mode autodiff tape. Ops executed inside an active Tape::Scope
/// append one record each (a name plus a backward closure). backward(loss)
/// seeds d(loss)/d(loss) = 1 and runs the closures in reverse order;
/// closures accumulate into Tensor::grad of their captured inputs.
///
/// The tape pointer is thread_local so recording needs no locking and
/// nested scopes on one thread stack correctly.
template <typename S>
class Tape {
public:
    struct Record {
        std::string name;
        std::function<void()> backward;
    };

    /// RAII activation: ops record onto `tape` while the Scope is alive.
    class Scope {
    public:
        explicit Scope(Tape& tape) : prev_(active_) { active_ = &tape; }
        ~Scope() { active_ = prev_; }
        Scope(const Scope&) = delete;
        Scope& operator=(const Scope&) = delete;

    private:
        Tape* prev_;
    };

    static Tape* active() { return active_; }

    void record(std::string name, std::function<void()> backward) {
        records_.push_back({std::move(name), std::move(backward)});
    }

    size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    const std::string& op_name(size_t i) const { return records_[i].name; }

    std::vector<std::string> op_names() const {
        std::vector<std::string> names;
        names.reserve(records_.size());
        for (const auto& r : records_) names.push_back(r.name);
        return names;
    }

    void clear() { records_.clear(); }

    /// Seed `loss` (a scalar) with gradient one and replay the tape in
    /// reverse. Gradients accumulate, so callers reusing parameter tensors
    /// across steps must zero_grad() them between backward passes.
    void backward(Tensor<S> loss) {
        if (loss.size() != 1)
            throw ShapeError("backward requires a scalar loss, got shape " + shape_str(loss.shape()));
        loss.grad()[0] += S(1);
        for (size_t i = records_.size(); i-- > 0;) records_[i].backward();
    }

private:
    std::vector<Record> records_;
    static thread_local Tape* active_;
};

template <typename S>
thread_local Tape<S>* Tape<S>::active_ = nullptr;

}  // namespace drumscribe
