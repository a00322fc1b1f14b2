import { mountPlayground } from "./app.js";

mountPlayground();
