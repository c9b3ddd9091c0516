// User-facing text for every error code the service emits. Each code gets
// its own distinct message; unknown codes fall back to a message that embeds
// the code so it stays distinguishable.

export const ERROR_MESSAGES: Record<string, string> = {
  unknown_session: "This session no longer exists on the server - start a new one.",
  invalid_state: "That action is not available in the session's current stage.",
  validation_error: "The request was malformed - this is a client bug.",
  value_error: "The server rejected a value in the request.",
  open_contour: "Polygon not closed: finish the stroke near its starting point.",
  empty_trajectory: "Nothing drawn yet - hold the mouse down to draw first.",
  too_few_points: "The stroke is too short to build that shape.",
  invalid_sample: "The tracker sample was rejected as invalid.",
  stale_calibration: "The calibration bundle is incomplete - recalibrate the rig.",
  behind_camera: "The point lies behind the camera and cannot be projected.",
  ray_parallel_to_plane: "That screen point does not reach the table surface.",
  frame_mismatch: "Internal frame mismatch in the projection chain.",
  annotation_out_of_frame: "The annotation starts outside the trackable image area.",
  dimension_mismatch: "Frame sizes do not match during tracking.",
  path_out_of_work_area: "The path leaves the calibrated work area.",
  parse_error: "A stored document could not be parsed.",
  empty_label_catalog: "No labels configured - create the session with a label list.",
  insufficient_samples: "Not enough valid tracker samples.",
  degenerate_motion: "Pivot motion too uniform to calibrate from.",
  http_error: "The server answered with an unexpected error.",
};

export function messageFor(code: string): string {
  return ERROR_MESSAGES[code] ?? `Unexpected server error (${code}).`;
}
