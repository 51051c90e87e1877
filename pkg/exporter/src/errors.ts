/** Base class for every error this package raises on purpose. */
export class ExporterError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

/** Examples or checkpoint dimensions disagree with the model. */
export class ShapeMismatchError extends ExporterError {}

/** Models in one prediction export disagree on the label space. */
export class LabelSpaceMismatchError extends ExporterError {}

/** Block deletion requested somewhere that is not a residual stage. */
export class NonResidualPointError extends ExporterError {}

/** Invalid export or experiment configuration. */
export class ConfigError extends ExporterError {}
