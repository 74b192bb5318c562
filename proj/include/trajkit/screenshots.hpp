// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>

#include "trajkit/image.hpp"
#include "trajkit/trajectory.hpp"

namespace trajkit {

/// Produces the decoded screenshot for an observation.
using ScreenshotLoader = std::function<Image(const Observation&)>;

/// Produces the encoded image attached to a request, or nothing.
using ImageProvider = std::function<std::optional<ImagePayload>(const Observation&)>;

/// Decodes PNG files referenced relative to the image store.
ScreenshotLoader store_screenshot_loader(ImageStore store);

/// Plain grey canvas at the observation's resolution, for synthetic data.
ScreenshotLoader blank_screenshot_loader();

/// Encodes whatever `loader` returns, tagging the payload with the
/// observation's screenshot reference.
ImageProvider provider_from_loader(ScreenshotLoader loader);

}  // namespace trajkit
