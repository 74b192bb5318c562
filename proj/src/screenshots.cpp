// SPDX-License-Identifier: Apache-2.0
#include "trajkit/screenshots.hpp"

namespace trajkit {

ScreenshotLoader store_screenshot_loader(ImageStore store) {
  return [store = std::move(store)](const Observation& obs) { return load_png(store.resolve(obs.screenshot_ref)); };
}

ScreenshotLoader blank_screenshot_loader() {
  return [](const Observation& obs) {
    return Image(obs.resolution.width, obs.resolution.height, Rgb{200, 200, 200});
  };
}

ImageProvider provider_from_loader(ScreenshotLoader loader) {
  return [loader = std::move(loader)](const Observation& obs) -> std::optional<ImagePayload> {
    return make_payload(loader(obs), obs.screenshot_ref);
  };
}

}  // namespace trajkit
